"""Hierarchical block extraction.

Starting from the plain sparse matrix, each level pairs similar rows, pulls
their shared columns out as two-row units, and aggregates those units into a
new sparse matrix whose rows stand for twice-as-tall dense columns. Rows left
behind at a level decode into blocks of that level's granularity. The result
is a list of block sets at granularities 1, 2, 4, ... that partitions the
original nonzeros exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ecsr import _kernels
from ecsr.core import CsrMatrix


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs shared by extraction, balancing, storage, and execution.

    warp_size lanes each read vector_size elements per step, so extracted
    blocks always hold a multiple of warp_size * vector_size columns.
    delta_bits bounds every stored column gap to 2**delta_bits - 1.
    """

    warp_size: int = 32
    vector_size: int = 4
    delta_bits: int = 8
    max_levels: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.warp_size < 1 or self.vector_size < 1:
            raise ValueError("warp_size and vector_size must be >= 1")
        if self.delta_bits not in (4, 8, 16):
            raise ValueError("delta_bits must be one of 4, 8, 16")
        if self.max_levels is not None and self.max_levels < 0:
            raise ValueError("max_levels must be >= 0 or None")

    @property
    def chunk_cols(self) -> int:
        return self.warp_size * self.vector_size

    @property
    def delta_limit(self) -> int:
        """Largest storable gap between consecutive columns."""
        return (1 << self.delta_bits) - 1


@dataclass
class Block:
    """A granularity-g block: g rows sharing nnc strictly increasing columns.

    values[k, :] holds row row_ids[k]; inserted marks gap-bridging zero
    columns that are not part of the original matrix.
    """

    granularity: int
    row_ids: np.ndarray
    col_ids: np.ndarray
    values: np.ndarray
    inserted: np.ndarray = None

    def __post_init__(self):
        self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
        self.col_ids = np.asarray(self.col_ids, dtype=np.int64)
        self.values = np.asarray(self.values)
        if self.inserted is None:
            self.inserted = np.zeros(self.col_ids.size, dtype=bool)
        self.inserted = np.asarray(self.inserted, dtype=bool)

    @property
    def nnc(self) -> int:
        """Stored column count, including inserted zero columns."""
        return int(self.col_ids.size)

    @property
    def real_cols(self) -> int:
        return int(np.count_nonzero(~self.inserted))

    @property
    def real_nnz(self) -> int:
        return self.granularity * self.real_cols


@dataclass
class BlockSet:
    granularity: int
    blocks: list
    vector_size: int = 1

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass
class EncodedMatrix:
    """Level-l aggregation matrix: each nonzero carries a dense column of
    2**level values, and each row maps back to 2**level original rows."""

    level: int
    num_rows: int
    num_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    payload: np.ndarray  # (nnz, 2**level)
    row_map: np.ndarray  # (num_rows, 2**level)

    @property
    def granularity(self) -> int:
        return 1 << self.level

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @classmethod
    def from_csr(cls, matrix: CsrMatrix) -> "EncodedMatrix":
        return cls(
            level=0,
            num_rows=matrix.num_rows,
            num_cols=matrix.num_cols,
            row_ptr=matrix.row_ptr.copy(),
            col_idx=matrix.col_idx.copy(),
            payload=matrix.values.reshape(-1, 1).astype(np.float64),
            row_map=np.arange(matrix.num_rows, dtype=np.int64).reshape(-1, 1),
        )

    def row_slice(self, i: int) -> slice:
        return slice(int(self.row_ptr[i]), int(self.row_ptr[i + 1]))


@dataclass
class PairUnit:
    """Columns pulled out of one matched row pair in one round; the stacked
    payloads make it a row of the next, twice-as-coarse level."""

    col_ids: np.ndarray
    payload: np.ndarray  # (len(col_ids), 2 * source granularity)
    row_ids: np.ndarray


def _coerce(pattern) -> EncodedMatrix:
    if isinstance(pattern, CsrMatrix):
        return EncodedMatrix.from_csr(pattern)
    return pattern


def row_matching(pattern, cfg: ExtractionConfig) -> list[tuple[int, int]]:
    """Greedily pair rows by shared-column count.

    Rows are visited in ascending index order; each is paired with the
    not-yet-taken row sharing the most columns (ties to the smallest index).
    A row whose best overlap falls below warp_size * vector_size stays
    unmatched: no later row could clear the bar with it either, since its
    overlap with every remaining candidate is also below the bar.
    """
    enc = _coerce(pattern)
    counts = _kernels.overlap_counts(enc.row_ptr, enc.col_idx, enc.num_rows, enc.num_cols)
    nonempty = np.flatnonzero(np.diff(enc.row_ptr) > 0)
    available = np.zeros(enc.num_rows, dtype=bool)
    available[nonempty] = True
    bar = cfg.chunk_cols
    pairs = []
    for i in nonempty:
        if not available[i]:
            continue
        available[i] = False
        candidates = np.where(available, counts[i], -1)
        j = int(np.argmax(candidates))
        if candidates[j] >= bar:
            pairs.append((int(i), j))
            available[j] = False
    return pairs


def _select_run_columns(shared: np.ndarray, cfg: ExtractionConfig) -> np.ndarray:
    """Indices into `shared` of the columns extraction may take.

    Shared columns split into maximal runs whose internal gaps fit the delta
    range; each run contributes its leading multiple of chunk_cols columns.
    """
    if shared.size == 0:
        return np.empty(0, dtype=np.int64)
    breaks = np.flatnonzero(np.diff(shared) > cfg.delta_limit)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks + 1, [shared.size]))
    picks = []
    for s, e in zip(starts, stops):
        usable = ((e - s) // cfg.chunk_cols) * cfg.chunk_cols
        if usable:
            picks.append(np.arange(s, s + usable, dtype=np.int64))
    if not picks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(picks)


def _filter_entries(enc: EncodedMatrix, keep: np.ndarray) -> EncodedMatrix:
    rows = np.repeat(np.arange(enc.num_rows), np.diff(enc.row_ptr))
    counts = np.bincount(rows[keep], minlength=enc.num_rows)
    row_ptr = np.zeros(enc.num_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return EncodedMatrix(
        level=enc.level,
        num_rows=enc.num_rows,
        num_cols=enc.num_cols,
        row_ptr=row_ptr,
        col_idx=enc.col_idx[keep],
        payload=enc.payload[keep],
        row_map=enc.row_map,
    )


def extract_round(enc: EncodedMatrix, pairs, cfg: ExtractionConfig):
    """Pull the extractable shared columns out of each matched pair.

    Returns (units, residual): one unit per pair that yielded columns, and
    the input matrix with those positions removed.
    """
    keep = np.ones(enc.nnz, dtype=bool)
    units = []
    for i, j in pairs:
        cols_i = enc.col_idx[enc.row_slice(i)]
        cols_j = enc.col_idx[enc.row_slice(j)]
        shared, pos_i, pos_j = np.intersect1d(
            cols_i, cols_j, assume_unique=True, return_indices=True
        )
        take = _select_run_columns(shared, cfg)
        if take.size == 0:
            continue
        gi = int(enc.row_ptr[i]) + pos_i[take]
        gj = int(enc.row_ptr[j]) + pos_j[take]
        units.append(
            PairUnit(
                col_ids=shared[take],
                payload=np.hstack((enc.payload[gi], enc.payload[gj])),
                row_ids=np.concatenate((enc.row_map[i], enc.row_map[j])),
            )
        )
        keep[gi] = False
        keep[gj] = False
    if not units:
        return units, enc
    return units, _filter_entries(enc, keep)


def multi_round_extract(enc: EncodedMatrix, cfg: ExtractionConfig):
    """Repeat match + extract on the shrinking residual until a round yields
    nothing. The union of all units plus the residual partitions the input."""
    units = []
    residual = enc
    while True:
        pairs = row_matching(residual, cfg)
        round_units, residual = extract_round(residual, pairs, cfg)
        if not round_units:
            return units, residual
        units.extend(round_units)


def encode_units(units, prior: EncodedMatrix) -> EncodedMatrix:
    """Aggregate extracted units into the next level's matrix, one row each."""
    g2 = 2 * prior.granularity
    counts = np.array([u.col_ids.size for u in units], dtype=np.int64)
    row_ptr = np.zeros(len(units) + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    if units:
        col_idx = np.concatenate([u.col_ids for u in units])
        payload = np.vstack([u.payload for u in units])
        row_map = np.vstack([u.row_ids for u in units])
    else:
        col_idx = np.empty(0, dtype=np.int64)
        payload = np.empty((0, g2), dtype=np.float64)
        row_map = np.empty((0, g2), dtype=np.int64)
    return EncodedMatrix(
        level=prior.level + 1,
        num_rows=len(units),
        num_cols=prior.num_cols,
        row_ptr=row_ptr,
        col_idx=col_idx,
        payload=payload,
        row_map=row_map,
    )


def _bridge_gaps(cols, values, limit):
    """Insert zero columns at stride `limit` wherever a gap exceeds it, so
    every stored gap fits the delta range. Returns (cols, values, inserted)."""
    gaps = np.diff(cols)
    wide = np.flatnonzero(gaps > limit)
    if wide.size == 0:
        return cols, values, np.zeros(cols.size, dtype=bool)
    g = values.shape[0]
    out_cols = [cols[: wide[0] + 1]]
    out_vals = [values[:, : wide[0] + 1]]
    out_ins = [np.zeros(wide[0] + 1, dtype=bool)]
    for n, k in enumerate(wide):
        fill = (int(gaps[k]) - 1) // limit
        stops = cols[k] + limit * np.arange(1, fill + 1, dtype=np.int64)
        out_cols.append(stops)
        out_vals.append(np.zeros((g, fill), dtype=values.dtype))
        out_ins.append(np.ones(fill, dtype=bool))
        nxt = wide[n + 1] + 1 if n + 1 < wide.size else cols.size
        out_cols.append(cols[k + 1 : nxt])
        out_vals.append(values[:, k + 1 : nxt])
        out_ins.append(np.zeros(nxt - k - 1, dtype=bool))
    return (
        np.concatenate(out_cols),
        np.hstack(out_vals),
        np.concatenate(out_ins),
    )


def decode_residual(enc: EncodedMatrix, cfg: ExtractionConfig) -> BlockSet:
    """Turn every non-empty row of a level matrix into one block of that
    level's granularity. Gaps wider than the delta range are bridged with
    explicit zero columns."""
    blocks = []
    for r in range(enc.num_rows):
        sl = enc.row_slice(r)
        if sl.start == sl.stop:
            continue
        cols = enc.col_idx[sl]
        values = enc.payload[sl].T  # (g, nnc)
        cols, values, inserted = _bridge_gaps(cols, values, cfg.delta_limit)
        blocks.append(
            Block(
                granularity=enc.granularity,
                row_ids=enc.row_map[r],
                col_ids=cols,
                values=values,
                inserted=inserted,
            )
        )
    return BlockSet(enc.granularity, blocks, vector_size=cfg.vector_size)


def extract_blocks(matrix: CsrMatrix, cfg: ExtractionConfig) -> list[BlockSet]:
    """Run the full level loop and return the non-empty block sets, finest
    granularity first. Every structural nonzero of the input lands in exactly
    one block exactly once."""
    enc = EncodedMatrix.from_csr(matrix)
    sets = []
    while True:
        if cfg.max_levels is not None and enc.level >= cfg.max_levels:
            sets.append(decode_residual(enc, cfg))
            break
        units, residual = multi_round_extract(enc, cfg)
        sets.append(decode_residual(residual, cfg))
        if not units:
            break
        enc = encode_units(units, enc)
    return [s for s in sets if s.blocks]
