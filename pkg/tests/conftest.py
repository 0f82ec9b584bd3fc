"""Shared test helpers: independent oracles for coverage and error norms."""

import numpy as np
import pytest

from ecsr.core import CsrMatrix


def rel_err(y, y_ref):
    """Infinity-norm error relative to the reference's largest magnitude."""
    y = np.asarray(y, dtype=np.float64)
    y_ref = np.asarray(y_ref, dtype=np.float64)
    if y_ref.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(y_ref))), 1e-30)
    return float(np.max(np.abs(y - y_ref))) / scale


def structural_pattern(matrix: CsrMatrix) -> np.ndarray:
    """0/1 matrix of stored entry positions (values ignored)."""
    pattern = np.zeros((matrix.num_rows, matrix.num_cols), dtype=np.int32)
    rows = np.repeat(np.arange(matrix.num_rows), np.diff(matrix.row_ptr))
    pattern[rows, matrix.col_idx] = 1
    return pattern


def coverage_counts(sets, num_rows, num_cols) -> np.ndarray:
    """How many times each matrix cell is claimed by a real block column."""
    counts = np.zeros((num_rows, num_cols), dtype=np.int32)
    for bset in sets:
        for block in bset.blocks:
            real_cols = block.col_ids[~block.inserted]
            for row in block.row_ids:
                counts[row, real_cols] += 1
    return counts


def scatter_back(sets, num_rows, num_cols, dtype=np.float64) -> np.ndarray:
    """Dense reassembly of all block values at their real columns."""
    dense = np.zeros((num_rows, num_cols), dtype=dtype)
    for bset in sets:
        for block in bset.blocks:
            real = ~block.inserted
            cols = block.col_ids[real]
            vals = block.values[:, real]
            for k, row in enumerate(block.row_ids):
                dense[row, cols] += vals[k]
    return dense
