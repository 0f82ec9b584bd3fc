"""Numpy implementations of the hot kernels.

These are the portable fallbacks behind ecsr._kernels; ecsr._speedups provides
the compiled equivalents. Both backends must agree exactly on integer results
(overlap counts, decoded indices) and to floating-point roundoff on SpMV.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def overlap_counts(row_ptr, col_idx, num_rows, num_cols):
    """Pairwise shared-column counts between all rows, diagonal zeroed.

    Densifies the pattern and multiplies; counts stay below 2**24 so float32
    products are exact.
    """
    counts = np.zeros((num_rows, num_rows), dtype=np.int32)
    if num_rows == 0 or len(col_idx) == 0:
        return counts
    dense = np.zeros((num_rows, num_cols), dtype=np.float32)
    rows = np.repeat(np.arange(num_rows), np.diff(row_ptr))
    dense[rows, col_idx] = 1.0
    counts = (dense @ dense.T).astype(np.int32)
    np.fill_diagonal(counts, 0)
    return counts


def spmv_set(g, warp_size, vector_size, row_ids, block_indptr, base_indices,
             delta_indices, block_values, x, y):
    """Accumulate one block set into y, walking blocks in container order.

    Index decode is exact integer arithmetic; per-block accumulation is
    vectorized, so float rounding differs from the strictly sequential
    compiled kernel by at most normal summation reordering.
    """
    chunk = warp_size * vector_size
    for b in range(len(block_indptr) - 1):
        start = int(block_indptr[b])
        stop = int(block_indptr[b + 1])
        n = stop - start
        if n == 0:
            continue
        iters = n // chunk
        # chunk-major layout back to one stream per lane
        lane_deltas = (
            delta_indices[start:stop]
            .reshape(iters, warp_size, vector_size)
            .transpose(1, 0, 2)
            .reshape(warp_size, iters * vector_size)
        )
        bases = base_indices[b * warp_size : (b + 1) * warp_size]
        idx = bases[:, None] + np.cumsum(lane_deltas.astype(np.int64), axis=1)
        lane_vals = (
            block_values[start * g : stop * g]
            .reshape(iters, warp_size, vector_size, g)
            .transpose(1, 0, 2, 3)
            .reshape(warp_size, iters * vector_size, g)
        )
        contrib = lane_vals * x[idx][:, :, None]
        res = contrib.sum(axis=(0, 1))
        y[row_ids[b * g : (b + 1) * g]] += res.astype(y.dtype)
