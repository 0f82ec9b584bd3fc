"""ECSR storage: the five-array per-set layout plus a pad/insert bitmask,
index compression, the coalescing permutation, a binary container, and
storage analytics.

Per block set the arrays are:

    row_indices   g row ids per block
    block_indptr  num_blocks + 1 offsets counting stored columns (padding included)
    base_indices  warp_size absolute column indices per block (one per lane)
    delta_indices one unsigned gap per stored column, chunk-permuted
    pad_mask      one bit per stored column, set for alignment padding and
                  for gap-bridging zero columns (needed to tell them apart
                  from genuine stored zeros when decoding)
    block_values  g scalars per stored column, chunk-permuted

On disk (all little-endian, arrays length-prefixed with a u64 element count):

    magic    b"ECSR"
    version  u8 (currently 1)
    vsize    u8 bytes per stored value (4 or 8)
    vbits    u8 accounting precision tag (16, 32, or 64)
    dbits    u8 delta precision (4, 8, or 16; 4-bit deltas pack two per
             byte, low nibble first)
    warp     u16
    rows     u64
    cols     u64
    nsets    u32
    sets     in order: desc {gran u32, vec u32, blocks u64, stored u64,
             real u64}, then row_indices (u32), block_indptr (u64),
             base_indices (u32), delta_indices (packed), pad_mask (packed
             bits, LSB first), block_values (f32/f64)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ecsr.balance import clip_blocks, reorder_sets
from ecsr.core import CsrMatrix, _interior_gap_mask
from ecsr.errors import ContainerError, DeltaOverflowError
from ecsr.extraction import Block, BlockSet, ExtractionConfig, extract_blocks

MAGIC = b"ECSR"
VERSION = 1


@dataclass
class EcCsrSet:
    granularity: int
    vector_size: int
    num_blocks: int
    stored_cols: int
    real_nnz: int
    row_indices: np.ndarray
    block_indptr: np.ndarray
    base_indices: np.ndarray
    delta_indices: np.ndarray
    pad_mask: np.ndarray
    block_values: np.ndarray


@dataclass
class EcCsrMatrix:
    num_rows: int
    num_cols: int
    value_bits: int
    delta_bits: int
    warp_size: int
    sets: list

    @property
    def dtype(self):
        for s in self.sets:
            return s.block_values.dtype
        return np.dtype(np.float64)

    @property
    def nnz(self) -> int:
        return sum(s.real_nnz for s in self.sets)

    def astype(self, dtype) -> "EcCsrMatrix":
        sets = [
            EcCsrSet(
                s.granularity, s.vector_size, s.num_blocks, s.stored_cols,
                s.real_nnz, s.row_indices, s.block_indptr, s.base_indices,
                s.delta_indices, s.pad_mask, s.block_values.astype(dtype),
            )
            for s in self.sets
        ]
        return EcCsrMatrix(
            self.num_rows, self.num_cols, self.value_bits, self.delta_bits,
            self.warp_size, sets,
        )


def split_one_grained(bset: BlockSet, cfg: ExtractionConfig):
    """Split each single-row block into a vectorizable long part holding a
    multiple of chunk_cols columns and a short remainder executed with
    vector size 1 (padded up to the warp size when encoded)."""
    if bset.granularity != 1:
        raise ValueError("split applies to 1-grained sets only")
    chunk = cfg.chunk_cols
    long_blocks, short_blocks = [], []
    for block in bset.blocks:
        cut = (block.nnc // chunk) * chunk
        if cut:
            long_blocks.append(
                Block(1, block.row_ids, block.col_ids[:cut],
                      block.values[:, :cut], block.inserted[:cut])
            )
        if cut < block.nnc:
            short_blocks.append(
                Block(1, block.row_ids, block.col_ids[cut:],
                      block.values[:, cut:], block.inserted[cut:])
            )
    return (
        BlockSet(1, long_blocks, vector_size=cfg.vector_size),
        BlockSet(1, short_blocks, vector_size=1),
    )


def compress_block_indices(cols, warp_size: int, delta_limit: int | None = None):
    """Per-lane base plus delta encoding of one block's stored columns.

    The columns split into warp_size equal contiguous segments; each lane
    stores its segment's first column as an absolute base, a leading zero
    delta, and then the gaps. Reconstruction is base + prefix sum.
    """
    cols = np.asarray(cols, dtype=np.int64)
    if cols.size % warp_size:
        raise ValueError("stored column count must be a multiple of warp_size")
    seg = cols.reshape(warp_size, cols.size // warp_size)
    bases = seg[:, 0].copy()
    deltas = np.diff(seg, axis=1, prepend=seg[:, :1])
    if delta_limit is not None and deltas.size and int(deltas.max()) > delta_limit:
        raise DeltaOverflowError(
            f"gap {int(deltas.max())} exceeds the {delta_limit} delta range"
        )
    if deltas.size and int(deltas.min()) < 0:
        raise ValueError("columns must be non-decreasing within each lane segment")
    return bases.astype(np.uint32), deltas.reshape(-1).astype(np.uint32)


def _permute_stream(arr, warp_size: int, vector_size: int, item: int = 1):
    """Lane-major stream to chunk-major: chunk i holds every lane's i-th
    vector_size-sized piece, so one warp step reads one contiguous span."""
    per_lane = arr.size // (warp_size * item)
    chunks = per_lane // vector_size
    return (
        arr.reshape(warp_size, chunks, vector_size * item)
        .transpose(1, 0, 2)
        .reshape(-1)
    )


def _unpermute_stream(arr, warp_size: int, vector_size: int, item: int = 1):
    per_lane = arr.size // (warp_size * item)
    chunks = per_lane // vector_size
    return (
        arr.reshape(chunks, warp_size, vector_size * item)
        .transpose(1, 0, 2)
        .reshape(-1)
    )


def permute_layout(deltas, values, g: int, warp_size: int, vector_size: int):
    """Chunk-permute a block's delta and value streams (see _permute_stream)."""
    return (
        _permute_stream(np.asarray(deltas), warp_size, vector_size, 1),
        _permute_stream(np.asarray(values), warp_size, vector_size, g),
    )


def unpermute_layout(deltas, values, g: int, warp_size: int, vector_size: int):
    return (
        _unpermute_stream(np.asarray(deltas), warp_size, vector_size, 1),
        _unpermute_stream(np.asarray(values), warp_size, vector_size, g),
    )


def _stored_arrays(block: Block, warp_size: int, vector_size: int):
    """Pad a block's columns up to a multiple of warp_size * vector_size.

    Padding repeats the last column of its lane segment with a zero value;
    segments that end up entirely padding use column 0 as their base.
    """
    n = block.nnc
    total = -(-n // (warp_size * vector_size)) * (warp_size * vector_size)
    if total == n:
        return block.col_ids, block.values, block.inserted
    seg = total // warp_size
    cols = np.zeros(total, dtype=np.int64)
    cols[:n] = block.col_ids
    pad_pos = np.arange(n, total)
    partial = (pad_pos // seg) * seg < n
    cols[pad_pos[partial]] = block.col_ids[n - 1]
    values = np.zeros((block.granularity, total), dtype=block.values.dtype)
    values[:, :n] = block.values
    mask = np.ones(total, dtype=bool)
    mask[:n] = block.inserted
    return cols, values, mask


def encode_ec_csr(sets, cfg: ExtractionConfig, num_rows: int, num_cols: int,
                  dtype=np.float64, value_bits: int | None = None) -> EcCsrMatrix:
    """Assemble balanced block sets into the ECSR container."""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError("container values must be float32 or float64")
    if value_bits is None:
        value_bits = dtype.itemsize * 8
    warp = cfg.warp_size
    ec_sets = []
    for bset in sets:
        g = bset.granularity
        v = bset.vector_size
        rows, bases_all, deltas_all, mask_all, values_all = [], [], [], [], []
        indptr = np.zeros(len(bset.blocks) + 1, dtype=np.int64)
        real_nnz = 0
        for k, block in enumerate(bset.blocks):
            cols, values, mask = _stored_arrays(block, warp, v)
            bases, lane_deltas = compress_block_indices(cols, warp, cfg.delta_limit)
            lane_values = values.T.reshape(-1).astype(dtype)
            pd, pv = permute_layout(lane_deltas, lane_values, g, warp, v)
            pm = _permute_stream(mask, warp, v, 1)
            rows.append(block.row_ids)
            bases_all.append(bases)
            deltas_all.append(pd)
            mask_all.append(pm)
            values_all.append(pv)
            indptr[k + 1] = indptr[k] + cols.size
            real_nnz += g * int(np.count_nonzero(~mask))
        ec_sets.append(
            EcCsrSet(
                granularity=g,
                vector_size=v,
                num_blocks=len(bset.blocks),
                stored_cols=int(indptr[-1]),
                real_nnz=real_nnz,
                row_indices=_concat(rows, np.uint32),
                block_indptr=indptr,
                base_indices=_concat(bases_all, np.uint32),
                delta_indices=_concat(deltas_all, np.uint32),
                pad_mask=_concat(mask_all, bool),
                block_values=_concat(values_all, dtype),
            )
        )
    return EcCsrMatrix(num_rows, num_cols, value_bits, cfg.delta_bits, warp, ec_sets)


def _concat(parts, dtype):
    if not parts:
        return np.empty(0, dtype=dtype)
    return np.concatenate(parts).astype(dtype)


def decode_ec_csr(ec: EcCsrMatrix) -> CsrMatrix:
    """Scatter every stored entry back into a CSR matrix, dropping padding
    and inserted zero columns. Reproduces the pre-encoding matrix exactly."""
    warp = ec.warp_size
    out_rows, out_cols, out_vals = [], [], []
    for s in ec.sets:
        g, v = s.granularity, s.vector_size
        _check_set_shapes(s, warp)
        for b in range(s.num_blocks):
            start, stop = int(s.block_indptr[b]), int(s.block_indptr[b + 1])
            n = stop - start
            if n == 0:
                continue
            lane_deltas, lane_values = unpermute_layout(
                s.delta_indices[start:stop],
                s.block_values[start * g : stop * g],
                g, warp, v,
            )
            lane_mask = _unpermute_stream(s.pad_mask[start:stop], warp, v, 1)
            seg = lane_deltas.reshape(warp, n // warp).astype(np.int64)
            bases = s.base_indices[b * warp : (b + 1) * warp].astype(np.int64)
            cols = (bases[:, None] + np.cumsum(seg, axis=1)).reshape(-1)
            if cols.size and int(cols.max()) >= ec.num_cols:
                raise ContainerError(
                    f"decoded column {int(cols.max())} out of range {ec.num_cols}"
                )
            keep = ~lane_mask
            block_rows = s.row_indices[b * g : (b + 1) * g].astype(np.int64)
            kept_cols = cols[keep]
            kept_vals = lane_values.reshape(n, g)[keep]
            out_rows.append(np.repeat(block_rows[None, :], kept_cols.size, axis=0).reshape(-1))
            out_cols.append(np.repeat(kept_cols, g))
            out_vals.append(kept_vals.reshape(-1))
    if out_rows:
        rows = np.concatenate(out_rows)
        cols = np.concatenate(out_cols)
        vals = np.concatenate(out_vals)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=ec.dtype)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
        raise ContainerError("duplicate entries while decoding; container is inconsistent")
    if rows.size and (int(rows.max()) >= ec.num_rows or int(rows.min()) < 0):
        raise ContainerError("row index out of range while decoding")
    row_ptr = np.zeros(ec.num_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=ec.num_rows), out=row_ptr[1:])
    return CsrMatrix(ec.num_rows, ec.num_cols, row_ptr, cols, vals)


def _check_set_shapes(s: EcCsrSet, warp: int) -> None:
    if len(s.block_indptr) != s.num_blocks + 1:
        raise ContainerError("block_indptr length mismatch")
    if s.block_indptr[0] != 0 or np.any(np.diff(s.block_indptr) < 0):
        raise ContainerError("block_indptr must start at 0 and be non-decreasing")
    if int(s.block_indptr[-1]) != s.stored_cols:
        raise ContainerError("block_indptr does not cover stored columns")
    if len(s.delta_indices) != s.stored_cols or len(s.pad_mask) != s.stored_cols:
        raise ContainerError("delta or mask array length mismatch")
    if len(s.block_values) != s.stored_cols * s.granularity:
        raise ContainerError("block_values length mismatch")
    if len(s.row_indices) != s.num_blocks * s.granularity:
        raise ContainerError("row_indices length mismatch")
    if len(s.base_indices) != s.num_blocks * warp:
        raise ContainerError("base_indices length mismatch")
    widths = np.diff(s.block_indptr)
    if np.any(widths % (warp * s.vector_size)):
        raise ContainerError("block widths must be multiples of warp_size * vector_size")


# --- binary container ---------------------------------------------------


def _pack_deltas(deltas: np.ndarray, bits: int) -> bytes:
    if deltas.size and int(deltas.max()) >= (1 << bits):
        raise ContainerError(f"delta exceeds {bits}-bit range")
    if bits == 4:
        d = deltas.astype(np.uint8)
        if d.size % 2:
            d = np.concatenate((d, np.zeros(1, dtype=np.uint8)))
        return (d[0::2] | (d[1::2] << 4)).tobytes()
    if bits == 8:
        return deltas.astype(np.uint8).tobytes()
    return deltas.astype("<u2").tobytes()


def _unpack_deltas(buf: bytes, count: int, bits: int) -> np.ndarray:
    if bits == 4:
        raw = np.frombuffer(buf, dtype=np.uint8)
        out = np.empty(raw.size * 2, dtype=np.uint32)
        out[0::2] = raw & 0x0F
        out[1::2] = raw >> 4
        return out[:count].copy()
    if bits == 8:
        return np.frombuffer(buf, dtype=np.uint8).astype(np.uint32)
    return np.frombuffer(buf, dtype="<u2").astype(np.uint32)


def _delta_bytes(count: int, bits: int) -> int:
    if bits == 4:
        return (count + 1) // 2
    return count * (bits // 8)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerError(
                f"truncated container: needed {n} bytes for {what} at offset {self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def array(self, dtype, what: str) -> np.ndarray:
        (count,) = self.unpack("<Q", what + " length")
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(count * dt.itemsize, what), dtype=dt).copy()


def serialize(ec: EcCsrMatrix) -> bytes:
    """Bit-exact binary encoding of the container."""
    dtype = ec.dtype
    parts = [
        MAGIC,
        struct.pack(
            "<BBBBHQQL",
            VERSION,
            dtype.itemsize,
            ec.value_bits,
            ec.delta_bits,
            ec.warp_size,
            ec.num_rows,
            ec.num_cols,
            len(ec.sets),
        ),
    ]
    for s in ec.sets:
        parts.append(
            struct.pack(
                "<LLQQQ", s.granularity, s.vector_size, s.num_blocks,
                s.stored_cols, s.real_nnz,
            )
        )
        for arr, dt in (
            (s.row_indices, "<u4"),
            (s.block_indptr, "<u8"),
            (s.base_indices, "<u4"),
        ):
            a = np.ascontiguousarray(arr).astype(dt)
            parts.append(struct.pack("<Q", a.size))
            parts.append(a.tobytes())
        parts.append(struct.pack("<Q", s.delta_indices.size))
        parts.append(_pack_deltas(s.delta_indices, ec.delta_bits))
        parts.append(struct.pack("<Q", s.pad_mask.size))
        parts.append(np.packbits(s.pad_mask.astype(np.uint8), bitorder="little").tobytes())
        vals = np.ascontiguousarray(s.block_values, dtype=dtype.newbyteorder("<"))
        parts.append(struct.pack("<Q", vals.size))
        parts.append(vals.tobytes())
    return b"".join(parts)


def deserialize(data: bytes) -> EcCsrMatrix:
    """Parse a serialized container, rejecting corruption with diagnostics."""
    rd = _Reader(data)
    if rd.take(4, "magic") != MAGIC:
        raise ContainerError("bad magic: not an ECSR container")
    version, vsize, vbits, dbits, warp, rows, cols, nsets = rd.unpack(
        "<BBBBHQQL", "header"
    )
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if vsize not in (4, 8):
        raise ContainerError(f"unsupported value width {vsize}")
    if vbits not in (16, 32, 64):
        raise ContainerError(f"unsupported value precision tag {vbits}")
    if dbits not in (4, 8, 16):
        raise ContainerError(f"unsupported delta precision {dbits}")
    if warp < 1:
        raise ContainerError("warp size must be positive")
    dtype = np.dtype(np.float32 if vsize == 4 else np.float64)
    sets = []
    for _ in range(nsets):
        g, v, num_blocks, stored, real = rd.unpack("<LLQQQ", "set descriptor")
        if g < 1 or v < 1:
            raise ContainerError("set granularity and vector size must be positive")
        row_indices = rd.array("<u4", "row_indices")
        block_indptr = rd.array("<u8", "block_indptr").astype(np.int64)
        base_indices = rd.array("<u4", "base_indices")
        (dcount,) = rd.unpack("<Q", "delta_indices length")
        deltas = _unpack_deltas(rd.take(_delta_bytes(dcount, dbits), "delta_indices"), dcount, dbits)
        (mcount,) = rd.unpack("<Q", "pad_mask length")
        mask_bytes = rd.take((mcount + 7) // 8, "pad_mask")
        mask = np.unpackbits(
            np.frombuffer(mask_bytes, dtype=np.uint8), count=mcount, bitorder="little"
        ).astype(bool)
        values = rd.array(dtype.newbyteorder("<"), "block_values").astype(dtype)
        s = EcCsrSet(
            granularity=int(g),
            vector_size=int(v),
            num_blocks=int(num_blocks),
            stored_cols=int(stored),
            real_nnz=int(real),
            row_indices=row_indices,
            block_indptr=block_indptr,
            base_indices=base_indices,
            delta_indices=deltas,
            pad_mask=mask,
            block_values=values,
        )
        _check_set_shapes(s, warp)
        sets.append(s)
    if rd.pos != len(data):
        raise ContainerError(f"{len(data) - rd.pos} trailing bytes after container")
    return EcCsrMatrix(int(rows), int(cols), vbits, dbits, warp, sets)


def save_container(ec: EcCsrMatrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(ec))


def load_container(path) -> EcCsrMatrix:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


# --- analytics ----------------------------------------------------------


@dataclass
class CostReport:
    """Modeled storage for the container against CSR and dense baselines,
    plus the input-vector access cost of the blocking (unit cost 1)."""

    num_rows: int
    num_cols: int
    nnz: int
    value_bits: int
    index_bits_baseline: int
    delta_bits: int
    per_set: list
    components: dict
    ec_total_bytes: int
    csr_total_bytes: int
    dense_total_bytes: int
    padding_overhead: float
    vector_access_units: float
    unblocked_access_units: float

    @property
    def csr_ratio(self) -> float:
        return self.ec_total_bytes / self.csr_total_bytes if self.csr_total_bytes else float("inf")

    @property
    def dense_ratio(self) -> float:
        return self.ec_total_bytes / self.dense_total_bytes if self.dense_total_bytes else float("inf")

    def to_json(self) -> dict:
        return {
            "num_rows": self.num_rows,
            "num_cols": self.num_cols,
            "nnz": self.nnz,
            "value_bits": self.value_bits,
            "index_bits_baseline": self.index_bits_baseline,
            "delta_bits": self.delta_bits,
            "per_set": self.per_set,
            "components": self.components,
            "ec_total_bytes": self.ec_total_bytes,
            "csr_total_bytes": self.csr_total_bytes,
            "dense_total_bytes": self.dense_total_bytes,
            "csr_ratio": self.csr_ratio,
            "dense_ratio": self.dense_ratio,
            "padding_overhead": self.padding_overhead,
            "vector_access_units": self.vector_access_units,
            "unblocked_access_units": self.unblocked_access_units,
        }

    def to_text(self) -> str:
        lines = [
            f"matrix.rows={self.num_rows}",
            f"matrix.cols={self.num_cols}",
            f"matrix.nnz={self.nnz}",
            f"model.value_bits={self.value_bits}",
            f"model.index_bits={self.index_bits_baseline}",
            f"model.delta_bits={self.delta_bits}",
        ]
        for entry in self.per_set:
            tag = f"set.g{entry['granularity']}v{entry['vector_size']}"
            for key in ("blocks", "stored_cols", "real_nnz", "bytes"):
                lines.append(f"{tag}.{key}={entry[key]}")
        for name, size in self.components.items():
            lines.append(f"bytes.{name}={size}")
        lines += [
            f"bytes.ec_total={self.ec_total_bytes}",
            f"bytes.csr_total={self.csr_total_bytes}",
            f"bytes.dense_total={self.dense_total_bytes}",
            f"ratio.ec_vs_csr={self.csr_ratio:.6f}",
            f"ratio.ec_vs_dense={self.dense_ratio:.6f}",
            f"padding.overhead={self.padding_overhead:.6f}",
            f"access.vector_units={self.vector_access_units:.1f}",
            f"access.unblocked_units={self.unblocked_access_units:.1f}",
        ]
        return "\n".join(lines)


_HEADER_BYTES = 4 + struct.calcsize("<BBBBHQQL")
_DESC_BYTES = struct.calcsize("<LLQQQ")


def storage_report(ec: EcCsrMatrix, value_bits: int | None = None,
                   index_bits_baseline: int = 32) -> CostReport:
    """Byte accounting for the container under a chosen value precision.

    The value precision is a model (16-bit counts half of a float32 array);
    index arrays are costed at their serialized widths. The CSR baseline uses
    index_bits_baseline-wide column indices and a 32-bit row pointer; dense
    is value_bits per cell.
    """
    if value_bits is None:
        value_bits = ec.value_bits
    if value_bits not in (16, 32, 64):
        raise ValueError("value_bits must be 16, 32, or 64")
    components = {
        "desc": _HEADER_BYTES + _DESC_BYTES * len(ec.sets),
        "row_indices": 0,
        "block_indptr": 0,
        "base_indices": 0,
        "delta_indices": 0,
        "pad_mask": 0,
        "block_values": 0,
    }
    per_set = []
    stored_scalars = 0
    real_scalars = 0
    access_units = 0.0
    for s in ec.sets:
        sizes = {
            "row_indices": 4 * s.num_blocks * s.granularity,
            "block_indptr": 8 * (s.num_blocks + 1),
            "base_indices": 4 * s.num_blocks * ec.warp_size,
            "delta_indices": _delta_bytes(s.stored_cols, ec.delta_bits),
            "pad_mask": (s.stored_cols + 7) // 8,
            "block_values": s.stored_cols * s.granularity * value_bits // 8,
        }
        for key, val in sizes.items():
            components[key] += val
        per_set.append(
            {
                "granularity": s.granularity,
                "vector_size": s.vector_size,
                "blocks": s.num_blocks,
                "stored_cols": s.stored_cols,
                "real_nnz": s.real_nnz,
                "bytes": sum(sizes.values()),
            }
        )
        stored_scalars += s.stored_cols * s.granularity
        real_scalars += s.real_nnz
        access_units += s.real_nnz / s.granularity
    ec_total = sum(components.values())
    nnz = real_scalars
    csr_total = nnz * value_bits // 8 + nnz * index_bits_baseline // 8 + 4 * (ec.num_rows + 1)
    dense_total = ec.num_rows * ec.num_cols * value_bits // 8
    padding = (stored_scalars - real_scalars) / real_scalars if real_scalars else 0.0
    return CostReport(
        num_rows=ec.num_rows,
        num_cols=ec.num_cols,
        nnz=nnz,
        value_bits=value_bits,
        index_bits_baseline=index_bits_baseline,
        delta_bits=ec.delta_bits,
        per_set=per_set,
        components=components,
        ec_total_bytes=ec_total,
        csr_total_bytes=csr_total,
        dense_total_bytes=dense_total,
        padding_overhead=padding,
        vector_access_units=access_units,
        unblocked_access_units=float(nnz),
    )


@dataclass
class DeltaHistogram:
    """Distribution of gaps between adjacent nonzeros within rows."""

    counts: np.ndarray  # counts[d] = number of gaps equal to d
    total: int

    def fraction_le(self, threshold: int) -> float:
        if self.total == 0:
            return 1.0
        stop = min(threshold + 1, self.counts.size)
        return float(self.counts[:stop].sum()) / self.total

    def cdf_points(self, thresholds) -> list:
        return [(int(t), self.fraction_le(int(t))) for t in thresholds]


def delta_histogram(matrix: CsrMatrix) -> DeltaHistogram:
    if matrix.nnz < 2:
        return DeltaHistogram(np.zeros(1, dtype=np.int64), 0)
    gaps = np.diff(matrix.col_idx)[_interior_gap_mask(matrix.row_ptr, matrix.nnz)]
    if gaps.size == 0:
        return DeltaHistogram(np.zeros(1, dtype=np.int64), 0)
    counts = np.bincount(gaps)
    return DeltaHistogram(counts.astype(np.int64), int(gaps.size))


# --- pipeline helpers ----------------------------------------------------


def pipeline_sets(matrix: CsrMatrix, cfg: ExtractionConfig,
                  clip_limit: int | None = None) -> list[BlockSet]:
    """Extract, clip, reorder, and split the 1-grained set: the block sets
    exactly as they go into the container."""
    sets = [clip_blocks(s, cfg, clip_limit) for s in extract_blocks(matrix, cfg)]
    final = []
    for bset in reorder_sets(sets):
        if bset.granularity == 1:
            long_set, short_set = split_one_grained(bset, cfg)
            if long_set.blocks:
                final.append(long_set)
            if short_set.blocks:
                final.append(short_set)
        else:
            final.append(bset)
    return reorder_sets(final)


def convert_csr(matrix: CsrMatrix, cfg: ExtractionConfig,
                clip_limit: int | None = None, dtype=None,
                value_bits: int | None = None) -> EcCsrMatrix:
    """Full offline pipeline: matrix in, container out."""
    if dtype is None:
        dtype = matrix.values.dtype
    sets = pipeline_sets(matrix, cfg, clip_limit)
    return encode_ec_csr(sets, cfg, matrix.num_rows, matrix.num_cols,
                         dtype=dtype, value_bits=value_bits)
