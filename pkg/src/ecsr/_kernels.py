"""Kernel backend selection.

The compiled extension (ecsr._speedups) is preferred when importable; the
numpy fallback is always available. Set ECSR_PURE_PYTHON=1 to force the
fallback, or call use_backend() to switch at runtime (the CLI bench command
does this to compare the two).
"""

from __future__ import annotations

import os

import numpy as np

from ecsr import _kernels_py

_BACKENDS = {"python": _kernels_py}
try:
    from ecsr import _speedups

    _BACKENDS["compiled"] = _speedups
except ImportError:
    _speedups = None

if os.environ.get("ECSR_PURE_PYTHON"):
    _active = _kernels_py
else:
    _active = _speedups if _speedups is not None else _kernels_py


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def active_backend() -> str:
    return _active.NAME


def use_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]


# The merge kernel does sum(count(c)^2) scattered updates; the dense matmul
# does num_rows^2 * num_cols fused multiply-adds at a much higher rate. The
# divisor is the empirical throughput gap between the two.
_DENSE_ADVANTAGE = 48


def _merge_is_faster(col_idx, num_rows, num_cols):
    per_col = np.bincount(np.asarray(col_idx), minlength=num_cols)
    merge_ops = int((per_col.astype(np.int64) ** 2).sum())
    dense_ops = num_rows * num_rows * max(num_cols, 1)
    return merge_ops * _DENSE_ADVANTAGE < dense_ops


def overlap_counts(row_ptr, col_idx, num_rows, num_cols):
    impl = _active
    if impl is not _kernels_py and not _merge_is_faster(col_idx, num_rows, num_cols):
        impl = _kernels_py
    return impl.overlap_counts(row_ptr, col_idx, num_rows, num_cols)


def spmv_set(g, warp_size, vector_size, row_ids, block_indptr, base_indices,
             delta_indices, block_values, x, y):
    return _active.spmv_set(
        g, warp_size, vector_size, row_ids, block_indptr, base_indices,
        delta_indices, block_values, x, y,
    )
