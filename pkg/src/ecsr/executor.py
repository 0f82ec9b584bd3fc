"""Deterministic CPU emulation of the ECSR SpMV kernel.

One warp processes one block: each lane walks its delta segment keeping a
running column index, multiplies the column's g values into g registers,
lanes reduce in a fixed binary tree, and lane 0 accumulates into y. Blocks
execute sequentially in container order, so results are bit-reproducible.

spmv_ec dispatches to the selected kernel backend; spmv_ec_traced is a pure
Python walker that additionally records every warp-step read so the chunked
layout can be audited (reads are issued in prefetch order: a chunk's deltas
and values are fetched one iteration ahead).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ecsr import _kernels
from ecsr.errors import ContainerError
from ecsr.extraction import ExtractionConfig
from ecsr.storage import EcCsrMatrix, _check_set_shapes


@dataclass(frozen=True)
class TraceRecord:
    warp: int
    step: int
    array: str  # "deltas" | "values" | "x" | "y"
    set_index: int
    start: int
    span: int


@dataclass
class AccessTrace:
    records: list = field(default_factory=list)

    def add(self, warp, step, array, set_index, start, span):
        self.records.append(TraceRecord(warp, step, array, set_index, start, span))

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def validate_container(ec: EcCsrMatrix) -> None:
    """Structural and range checks; raises ContainerError on any violation."""
    limit = 1 << ec.delta_bits
    for s in ec.sets:
        _check_set_shapes(s, ec.warp_size)
        if s.delta_indices.size and int(s.delta_indices.max()) >= limit:
            raise ContainerError(
                f"delta {int(s.delta_indices.max())} exceeds {ec.delta_bits}-bit range"
            )
        if s.base_indices.size and int(s.base_indices.max()) >= max(ec.num_cols, 1):
            raise ContainerError("base index out of range")
        warp = ec.warp_size
        for b in range(s.num_blocks):
            start, stop = int(s.block_indptr[b]), int(s.block_indptr[b + 1])
            if start == stop:
                continue
            chunk = warp * s.vector_size
            advance = (
                s.delta_indices[start:stop]
                .reshape((stop - start) // chunk, warp, s.vector_size)
                .astype(np.int64)
                .sum(axis=(0, 2))
            )
            tops = s.base_indices[b * warp : (b + 1) * warp].astype(np.int64) + advance
            if int(tops.max()) >= ec.num_cols:
                raise ContainerError(
                    f"decoded column {int(tops.max())} out of range {ec.num_cols}"
                )


def spmv_ec(ec: EcCsrMatrix, x: np.ndarray, validate: bool = True) -> np.ndarray:
    """y = A @ x computed from the container, in container precision."""
    x = np.asarray(x)
    if x.shape != (ec.num_cols,):
        raise ValueError(f"x has shape {x.shape}, expected ({ec.num_cols},)")
    if validate:
        validate_container(ec)
    dtype = ec.dtype
    x = np.ascontiguousarray(x, dtype=dtype)
    y = np.zeros(ec.num_rows, dtype=dtype)
    for s in ec.sets:
        _kernels.spmv_set(
            s.granularity, ec.warp_size, s.vector_size, s.row_indices,
            s.block_indptr, s.base_indices, s.delta_indices, s.block_values,
            x, y,
        )
    return y


def _pow2_at_least(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def spmv_ec_traced(ec: EcCsrMatrix, x: np.ndarray):
    """Canonical sequential walk, returning (y, AccessTrace).

    Matches the compiled kernel bit for bit: lane registers accumulate their
    columns in order and reduce in a fixed binary tree over lanes padded to
    a power of two.
    """
    x = np.asarray(x)
    if x.shape != (ec.num_cols,):
        raise ValueError(f"x has shape {x.shape}, expected ({ec.num_cols},)")
    validate_container(ec)
    dtype = ec.dtype
    x = np.ascontiguousarray(x, dtype=dtype)
    y = np.zeros(ec.num_rows, dtype=dtype)
    trace = AccessTrace()
    warp = ec.warp_size
    lanes_p2 = _pow2_at_least(warp)
    warp_id = 0
    for si, s in enumerate(ec.sets):
        g, v = s.granularity, s.vector_size
        chunk = warp * v
        for b in range(s.num_blocks):
            start, stop = int(s.block_indptr[b]), int(s.block_indptr[b + 1])
            iters = (stop - start) // chunk
            if iters == 0:
                warp_id += 1
                continue
            step = 0

            def read(array, offset, span, step=None):
                trace.add(warp_id, step, array, si, offset, span)

            # prefetch the first chunk, then fetch one ahead of compute
            read("deltas", start, chunk, step)
            read("values", start * g, chunk * g, step)
            res = np.zeros((lanes_p2, g), dtype=dtype)
            lane_idx = s.base_indices[b * warp : (b + 1) * warp].astype(np.int64).copy()
            for i in range(iters):
                step += 1
                if i + 1 < iters:
                    read("deltas", start + (i + 1) * chunk, chunk, step)
                    read("values", (start + (i + 1) * chunk) * g, chunk * g, step)
                for t in range(warp):
                    off = start + i * chunk + t * v
                    for j in range(v):
                        lane_idx[t] += int(s.delta_indices[off + j])
                        read("x", int(lane_idx[t]), 1, step)
                        xv = x[lane_idx[t]]
                        vals = s.block_values[(off + j) * g : (off + j + 1) * g]
                        for k in range(g):
                            res[t, k] = res[t, k] + vals[k] * xv
            m = lanes_p2
            while m > 1:
                half = m // 2
                res[:half] = res[:half] + res[half:m]
                m = half
            step += 1
            rows = s.row_indices[b * g : (b + 1) * g]
            for k in range(g):
                read("y", int(rows[k]), 1, step)
                y[rows[k]] += res[0, k]
            warp_id += 1
    return y, trace


def check_coalescing(ec: EcCsrMatrix, trace: AccessTrace) -> list[str]:
    """Audit the delta and value reads in a trace: every warp step must be a
    single contiguous span of exactly warp_size * v (deltas) or
    warp_size * v * g (values) entries, aligned to its own width, and the
    spans of one warp must tile its block's range exactly."""
    violations = []
    blocks = []  # global warp id -> (set_index, start, stop, g, v)
    for si, s in enumerate(ec.sets):
        for b in range(s.num_blocks):
            blocks.append(
                (si, int(s.block_indptr[b]), int(s.block_indptr[b + 1]),
                 s.granularity, s.vector_size)
            )
    seen = {}
    for rec in trace:
        if rec.array not in ("deltas", "values"):
            continue
        if rec.warp >= len(blocks):
            violations.append(f"warp {rec.warp} beyond container blocks")
            continue
        si, start, stop, g, v = blocks[rec.warp]
        width = ec.warp_size * v * (g if rec.array == "values" else 1)
        lo = start * (g if rec.array == "values" else 1)
        hi = stop * (g if rec.array == "values" else 1)
        if rec.set_index != si:
            violations.append(f"warp {rec.warp}: read from set {rec.set_index}, expected {si}")
        if rec.span != width:
            violations.append(
                f"warp {rec.warp}: {rec.array} span {rec.span}, expected {width}"
            )
        if rec.start % width:
            violations.append(
                f"warp {rec.warp}: {rec.array} read at {rec.start} not {width}-aligned"
            )
        if not (lo <= rec.start and rec.start + rec.span <= hi):
            violations.append(
                f"warp {rec.warp}: {rec.array} read [{rec.start}, {rec.start + rec.span}) "
                f"outside block range [{lo}, {hi})"
            )
        seen.setdefault((rec.warp, rec.array), []).append(rec.start)
    for (w, array), starts in seen.items():
        si, start, stop, g, v = blocks[w]
        width = ec.warp_size * v * (g if array == "values" else 1)
        lo = start * (g if array == "values" else 1)
        hi = stop * (g if array == "values" else 1)
        expected = list(range(lo, hi, width))
        if sorted(starts) != expected:
            violations.append(
                f"warp {w}: {array} steps do not tile the block exactly"
            )
    return violations


@dataclass
class AccessCost:
    """Input-vector traffic of a blocking in abstract units, plus the bytes
    of index metadata a full pass touches."""

    vector_units: float
    unblocked_units: float
    index_bytes: int | None = None


def access_cost(sets, cfg: ExtractionConfig | None = None, unit_cost: float = 1.0) -> AccessCost:
    """Each block column costs one input-vector access shared by g rows, so
    the total is unit_cost per real column; unblocked CSR pays unit_cost per
    nonzero. Inserted zero columns are excluded: they carry no matrix data."""
    vector_units = 0.0
    unblocked = 0.0
    index_bytes = 0
    for bset in sets:
        for block in bset.blocks:
            vector_units += unit_cost * block.real_cols
            unblocked += unit_cost * block.real_nnz
            if cfg is not None:
                index_bytes += cfg.warp_size * 4
                index_bytes += (block.nnc * cfg.delta_bits + 7) // 8
    return AccessCost(
        vector_units=vector_units,
        unblocked_units=unblocked,
        index_bytes=index_bytes if cfg is not None else None,
    )
