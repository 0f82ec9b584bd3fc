# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: pairwise overlap counting and the warp-emulated SpMV.

The SpMV here follows the canonical emulation order exactly: each lane
accumulates its columns sequentially, lanes reduce in a fixed binary tree,
and lane 0 scatters into y. The traced pure-Python walker reproduces the
same order bit for bit.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

ctypedef fused floating:
    float
    double


def overlap_counts(row_ptr, col_idx, int num_rows, int num_cols):
    """Pairwise shared-column counts between all rows, diagonal zeroed."""
    counts = np.zeros((num_rows, num_rows), dtype=np.int32)
    cdef cnp.int64_t[::1] rp = np.ascontiguousarray(row_ptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ci = np.ascontiguousarray(col_idx, dtype=np.int64)
    cdef Py_ssize_t nnz = ci.shape[0]
    if num_rows == 0 or nnz == 0:
        return counts

    # invert to per-column row lists (CSC order)
    order = np.argsort(np.asarray(col_idx), kind="stable")
    rows_of = np.repeat(np.arange(num_rows, dtype=np.int64), np.diff(np.asarray(row_ptr)))
    cdef cnp.int64_t[::1] col_rows = np.ascontiguousarray(rows_of[order])
    col_counts = np.bincount(np.asarray(col_idx), minlength=num_cols)
    cp = np.zeros(num_cols + 1, dtype=np.int64)
    np.cumsum(col_counts, out=cp[1:])
    cdef cnp.int64_t[::1] col_ptr = cp

    cdef cnp.int32_t[:, ::1] S = counts
    cdef Py_ssize_t i, p, q
    cdef cnp.int64_t c, j
    for i in range(num_rows):
        for p in range(rp[i], rp[i + 1]):
            c = ci[p]
            for q in range(col_ptr[c], col_ptr[c + 1]):
                j = col_rows[q]
                if j > i:
                    S[i, j] += 1
    return counts + counts.T


@cython.boundscheck(False)
def spmv_set(int g, int warp_size, int vector_size, row_ids, block_indptr,
             base_indices, delta_indices, block_values, x, y):
    """Accumulate one block set into y in the canonical emulation order."""
    if y.dtype == np.float64:
        _spmv_set_impl[double](
            g, warp_size, vector_size,
            np.ascontiguousarray(row_ids, dtype=np.uint32),
            np.ascontiguousarray(block_indptr, dtype=np.int64),
            np.ascontiguousarray(base_indices, dtype=np.uint32),
            np.ascontiguousarray(delta_indices, dtype=np.uint32),
            np.ascontiguousarray(block_values, dtype=np.float64),
            np.ascontiguousarray(x, dtype=np.float64),
            y)
    else:
        _spmv_set_impl[float](
            g, warp_size, vector_size,
            np.ascontiguousarray(row_ids, dtype=np.uint32),
            np.ascontiguousarray(block_indptr, dtype=np.int64),
            np.ascontiguousarray(base_indices, dtype=np.uint32),
            np.ascontiguousarray(delta_indices, dtype=np.uint32),
            np.ascontiguousarray(block_values, dtype=np.float32),
            np.ascontiguousarray(x, dtype=np.float32),
            y)


cdef _spmv_set_impl(int g, int warp_size, int vector_size,
                    cnp.uint32_t[::1] row_ids,
                    cnp.int64_t[::1] block_indptr,
                    cnp.uint32_t[::1] base_indices,
                    cnp.uint32_t[::1] delta_indices,
                    floating[::1] block_values,
                    floating[::1] x,
                    floating[::1] y):
    cdef Py_ssize_t num_blocks = block_indptr.shape[0] - 1
    cdef int chunk = warp_size * vector_size
    cdef int lanes_p2 = 1
    while lanes_p2 < warp_size:
        lanes_p2 *= 2

    res_arr = np.zeros(lanes_p2 * g, dtype=np.float64 if floating is double else np.float32)
    cdef floating[::1] res = res_arr

    cdef Py_ssize_t b, start, n, iters, i, base_off, voff
    cdef int t, j, k, m, half
    cdef cnp.int64_t idx
    cdef floating xv
    for b in range(num_blocks):
        start = block_indptr[b]
        n = block_indptr[b + 1] - start
        if n == 0:
            continue
        iters = n // chunk
        for t in range(lanes_p2 * g):
            res[t] = 0
        for t in range(warp_size):
            idx = base_indices[b * warp_size + t]
            for i in range(iters):
                base_off = start + i * chunk + t * vector_size
                voff = (start + i * chunk + t * vector_size) * g
                for j in range(vector_size):
                    idx += delta_indices[base_off + j]
                    xv = x[idx]
                    for k in range(g):
                        res[t * g + k] += block_values[voff + j * g + k] * xv
        # fixed binary-tree reduction over lanes (zero-padded to a power of two)
        m = lanes_p2
        while m > 1:
            half = m // 2
            for t in range(half):
                for k in range(g):
                    res[t * g + k] = res[t * g + k] + res[(t + half) * g + k]
            m = half
        for k in range(g):
            y[row_ids[b * g + k]] += res[k]
