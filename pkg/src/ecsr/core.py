"""Sparse matrix core: CSR container, MatrixMarket I/O, synthetic generation,
a reference SpMV, and row-pattern similarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecsr.errors import MatrixFormatError

MM_BANNER = "%%MatrixMarket matrix coordinate real general"


def _interior_gap_mask(row_ptr, nnz):
    """True at adjacent-entry gaps that do not cross a row boundary."""
    mask = np.ones(max(nnz - 1, 0), dtype=bool)
    boundaries = row_ptr[1:-1]
    boundaries = boundaries[(boundaries >= 1) & (boundaries <= nnz - 1)]
    mask[boundaries - 1] = False
    return mask


@dataclass(eq=False)
class CsrMatrix:
    """Compressed sparse row matrix with absolute, strictly increasing column indices.

    values may be float32 or float64; indices are int64. Explicit zeros are
    legal entries and are treated as structural nonzeros throughout.
    """

    num_rows: int
    num_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values)
        if self.values.dtype not in (np.float32, np.float64):
            self.values = self.values.astype(np.float64)
        if self.row_ptr.shape != (self.num_rows + 1,):
            raise ValueError("row_ptr must have num_rows + 1 entries")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != len(self.col_idx):
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if len(self.col_idx) != len(self.values):
            raise ValueError("col_idx and values must have equal length")
        if self.col_idx.size:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.num_cols:
                raise ValueError("column index out of range")
            gaps = np.diff(self.col_idx)
            if np.any(gaps[_interior_gap_mask(self.row_ptr, len(self.col_idx))] <= 0):
                raise ValueError("column indices must be strictly increasing within each row")

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def row_cols(self, i: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[i] : self.row_ptr[i + 1]]

    def row_values(self, i: int) -> np.ndarray:
        return self.values[self.row_ptr[i] : self.row_ptr[i + 1]]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.num_rows, self.num_cols), dtype=self.values.dtype)
        rows = np.repeat(np.arange(self.num_rows), np.diff(self.row_ptr))
        dense[rows, self.col_idx] = self.values
        return dense

    def astype(self, dtype) -> "CsrMatrix":
        return CsrMatrix(
            self.num_rows,
            self.num_cols,
            self.row_ptr.copy(),
            self.col_idx.copy(),
            self.values.astype(dtype),
        )

    def same_as(self, other: "CsrMatrix") -> bool:
        """Bit-exact structural and numerical equality."""
        return (
            self.num_rows == other.num_rows
            and self.num_cols == other.num_cols
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and self.values.dtype == other.values.dtype
            and self.values.tobytes() == other.values.tobytes()
        )


def csr_from_coo(num_rows, num_cols, rows, cols, vals, dtype=np.float64) -> CsrMatrix:
    """Build a CsrMatrix from unordered coordinate triples; duplicates are rejected."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=dtype)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size > 1:
        dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
        if np.any(dup):
            k = int(np.flatnonzero(dup)[0])
            raise MatrixFormatError(
                f"duplicate entry at row {rows[k] + 1}, column {cols[k] + 1}"
            )
    row_ptr = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_rows), out=row_ptr[1:])
    return CsrMatrix(num_rows, num_cols, row_ptr, cols, vals)


def load_matrix_market(path) -> CsrMatrix:
    """Parse a MatrixMarket coordinate file (general, real) into a 0-based CsrMatrix.

    Raises MatrixFormatError with a line number on any malformed content;
    duplicate entries and out-of-range indices are rejected.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixFormatError("line 1: empty file, missing MatrixMarket banner")
    banner = lines[0].strip().split()
    if len(banner) < 5 or banner[0].lower() != "%%matrixmarket":
        raise MatrixFormatError("line 1: missing '%%MatrixMarket' banner")
    kind = [tok.lower() for tok in banner[1:5]]
    if kind != ["matrix", "coordinate", "real", "general"]:
        raise MatrixFormatError(
            f"line 1: unsupported MatrixMarket type {' '.join(banner[1:5])!r}; "
            "only 'matrix coordinate real general' is supported"
        )

    lineno = 1
    header = None
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        header = text.split()
        break
    if header is None:
        raise MatrixFormatError(f"line {lineno}: missing size header")
    if len(header) != 3:
        raise MatrixFormatError(f"line {lineno}: size header must hold 3 integers")
    try:
        num_rows, num_cols, nnz = (int(tok) for tok in header)
    except ValueError as exc:
        raise MatrixFormatError(f"line {lineno}: bad size header: {exc}") from exc
    if num_rows < 0 or num_cols < 0 or nnz < 0:
        raise MatrixFormatError(f"line {lineno}: negative dimension")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    count = 0
    for entry_line, raw in enumerate(lines[lineno:], start=lineno + 1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"line {entry_line}: expected 'row col value'")
        if count >= nnz:
            raise MatrixFormatError(
                f"line {entry_line}: more entries than the declared {nnz}"
            )
        try:
            i = int(parts[0])
            j = int(parts[1])
            v = float(parts[2])
        except ValueError as exc:
            raise MatrixFormatError(f"line {entry_line}: bad entry: {exc}") from exc
        if not (1 <= i <= num_rows and 1 <= j <= num_cols):
            raise MatrixFormatError(
                f"line {entry_line}: index ({i}, {j}) outside {num_rows} x {num_cols}"
            )
        rows[count] = i - 1
        cols[count] = j - 1
        vals[count] = v
        count += 1
    if count != nnz:
        raise MatrixFormatError(f"declared {nnz} entries but found {count}")
    return csr_from_coo(num_rows, num_cols, rows, cols, vals)


def save_matrix_market(matrix: CsrMatrix, path) -> None:
    """Write a CsrMatrix as 1-based MatrixMarket coordinates, row-major order."""
    rows = np.repeat(np.arange(matrix.num_rows), np.diff(matrix.row_ptr))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(MM_BANNER + "\n")
        fh.write(f"{matrix.num_rows} {matrix.num_cols} {matrix.nnz}\n")
        for i, j, v in zip(rows, matrix.col_idx, matrix.values):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def generate_uniform(num_rows, num_cols, sparsity, seed, dtype=np.float64) -> CsrMatrix:
    """Generate a matrix whose cells are independently nonzero with probability
    1 - sparsity, values uniform in (-1, 1). Deterministic for a given seed."""
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    density = 1.0 - sparsity
    # Row-chunked mask draws keep the peak footprint small; the consumed
    # random stream is identical to a single full-matrix draw.
    chunk = max(1, min(num_rows, (1 << 22) // max(num_cols, 1)))
    col_parts = []
    counts = np.zeros(num_rows, dtype=np.int64)
    for start in range(0, num_rows, chunk):
        stop = min(start + chunk, num_rows)
        mask = rng.random((stop - start, num_cols)) < density
        r, c = np.nonzero(mask)
        counts[start:stop] = np.bincount(r, minlength=stop - start)
        col_parts.append(c)
    col_idx = np.concatenate(col_parts) if col_parts else np.empty(0, dtype=np.int64)
    row_ptr = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    values = rng.uniform(-1.0, 1.0, size=col_idx.size).astype(dtype)
    return CsrMatrix(num_rows, num_cols, row_ptr, col_idx.astype(np.int64), values)


def spmv_oracle(matrix: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Reference y = A @ x, accumulated in row order in float64.

    This is the canonical result every other execution path is checked against.
    """
    x = np.asarray(x)
    if x.shape != (matrix.num_cols,):
        raise ValueError(
            f"x has length {x.shape}, expected ({matrix.num_cols},)"
        )
    prod = matrix.values.astype(np.float64) * x.astype(np.float64)[matrix.col_idx]
    rows = np.repeat(np.arange(matrix.num_rows), np.diff(matrix.row_ptr))
    return np.bincount(rows, weights=prod, minlength=matrix.num_rows)


def shared_column_count(matrix: CsrMatrix, i: int, j: int) -> int:
    """Number of columns where both rows hold a structural nonzero."""
    if i == j:
        raise ValueError("rows must differ")
    for r in (i, j):
        if not 0 <= r < matrix.num_rows:
            raise IndexError(f"row {r} out of range")
    return int(
        np.intersect1d(matrix.row_cols(i), matrix.row_cols(j), assume_unique=True).size
    )
