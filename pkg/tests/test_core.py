"""Core container, MatrixMarket I/O, generation, reference SpMV, similarity."""

import numpy as np
import pytest

from ecsr import core
from ecsr.errors import MatrixFormatError

from conftest import rel_err


def write_mtx(path, num_rows, num_cols, entries):
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{num_rows} {num_cols} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i} {j} {v}\n")


class TestMatrixMarket:
    def test_diagonal(self, tmp_path):
        path = tmp_path / "d.mtx"
        write_mtx(path, 2, 2, [(1, 1, 5.0), (2, 2, 3.0)])
        m = core.load_matrix_market(path)
        assert m.row_ptr.tolist() == [0, 1, 2]
        assert m.col_idx.tolist() == [0, 1]
        assert m.values.tolist() == [5.0, 3.0]

    def test_empty(self, tmp_path):
        path = tmp_path / "e.mtx"
        write_mtx(path, 3, 3, [])
        m = core.load_matrix_market(path)
        assert m.row_ptr.tolist() == [0, 0, 0, 0]
        assert m.nnz == 0

    def test_unsorted_input_matches_sorted(self, tmp_path):
        # sort-then-compare oracle over 50 random small files
        rng = np.random.default_rng(11)
        for trial in range(50):
            rows = int(rng.integers(1, 9))
            cols = int(rng.integers(1, 9))
            cells = [(i, j) for i in range(rows) for j in range(cols)]
            take = rng.permutation(len(cells))[: int(rng.integers(0, len(cells) + 1))]
            entries = [
                (cells[t][0] + 1, cells[t][1] + 1, float(rng.uniform(-1, 1)))
                for t in take
            ]
            shuffled = tmp_path / f"s{trial}.mtx"
            ordered = tmp_path / f"o{trial}.mtx"
            write_mtx(shuffled, rows, cols, entries)
            write_mtx(ordered, rows, cols, sorted(entries))
            assert core.load_matrix_market(shuffled).same_as(
                core.load_matrix_market(ordered)
            )

    def test_write_read_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        for seed in range(8):
            m = core.generate_uniform(12, 17, 0.6, seed=seed)
            path = tmp_path / f"r{seed}.mtx"
            core.save_matrix_market(m, path)
            assert core.load_matrix_market(path).same_as(m)

    def test_duplicate_entry_rejected(self, tmp_path):
        path = tmp_path / "dup.mtx"
        write_mtx(path, 2, 2, [(1, 1, 1.0), (1, 1, 2.0)])
        with pytest.raises(MatrixFormatError, match="duplicate"):
            core.load_matrix_market(path)

    def test_out_of_range_index(self, tmp_path):
        path = tmp_path / "bad.mtx"
        write_mtx(path, 2, 2, [(3, 1, 1.0)])
        with pytest.raises(MatrixFormatError, match="line 3"):
            core.load_matrix_market(path)

    def test_bad_banner(self, tmp_path):
        path = tmp_path / "b.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n1 1 0\n")
        with pytest.raises(MatrixFormatError, match="line 1"):
            core.load_matrix_market(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "v.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 zap\n"
        )
        with pytest.raises(MatrixFormatError, match="line 3"):
            core.load_matrix_market(path)

    def test_missing_entries(self, tmp_path):
        path = tmp_path / "m.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n")
        with pytest.raises(MatrixFormatError, match="declared 2"):
            core.load_matrix_market(path)


class TestGenerate:
    def test_sparsity_zero_is_dense(self):
        m = core.generate_uniform(5, 7, 0.0, seed=0)
        assert m.nnz == 5 * 7

    def test_nnz_within_binomial_bound(self):
        m = core.generate_uniform(4096, 4096, 0.7, seed=1)
        n = 4096 * 4096
        expect = 0.3 * n
        sigma = np.sqrt(n * 0.3 * 0.7)
        assert abs(m.nnz - expect) <= 3 * sigma

    def test_deterministic(self):
        a = core.generate_uniform(33, 47, 0.8, seed=9)
        b = core.generate_uniform(33, 47, 0.8, seed=9)
        assert a.same_as(b)

    def test_bad_sparsity(self):
        with pytest.raises(ValueError):
            core.generate_uniform(4, 4, 1.0, seed=0)


class TestSpmvOracle:
    def test_identity(self):
        m = core.csr_from_coo(3, 3, range(3), range(3), [1.0] * 3)
        assert core.spmv_oracle(m, np.array([1.0, 2.0, 3.0])).tolist() == [1, 2, 3]

    def test_zero_matrix(self):
        m = core.csr_from_coo(4, 4, [], [], [])
        assert core.spmv_oracle(m, np.ones(4)).tolist() == [0, 0, 0, 0]

    def test_matches_dense_gemv(self):
        m = core.generate_uniform(8, 8, 0.5, seed=2)
        x = np.random.default_rng(0).uniform(-1, 1, 8)
        assert rel_err(core.spmv_oracle(m, x), m.to_dense() @ x) < 1e-14

    def test_linearity(self):
        m = core.generate_uniform(16, 20, 0.6, seed=4)
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, 20)
        z = rng.uniform(-1, 1, 20)
        a, b = 0.37, -2.5
        lhs = core.spmv_oracle(m, a * x + b * z)
        rhs = a * core.spmv_oracle(m, x) + b * core.spmv_oracle(m, z)
        assert rel_err(lhs, rhs) < 1e-12

    def test_dimension_mismatch(self):
        m = core.generate_uniform(4, 6, 0.5, seed=0)
        with pytest.raises(ValueError):
            core.spmv_oracle(m, np.ones(5))


class TestSharedColumnCount:
    def build(self, patterns, num_cols):
        rows, cols = [], []
        for r, cs in enumerate(patterns):
            rows += [r] * len(cs)
            cols += list(cs)
        return core.csr_from_coo(len(patterns), num_cols, rows, cols, np.ones(len(cols)))

    def test_identical_rows(self):
        m = self.build([[0, 2, 4, 6, 8], [0, 2, 4, 6, 8]], 10)
        assert core.shared_column_count(m, 0, 1) == 5

    def test_disjoint_rows(self):
        m = self.build([[0, 1], [2, 3]], 4)
        assert core.shared_column_count(m, 0, 1) == 0

    def test_subset_overlap(self):
        m = self.build([[3, 4, 5, 6], [0, 2, 3, 4, 5, 6, 7, 8]], 9)
        assert core.shared_column_count(m, 0, 1) == 4

    def test_symmetric_and_bounded(self):
        m = core.generate_uniform(10, 30, 0.6, seed=5)
        for i in range(9):
            c = core.shared_column_count(m, i, i + 1)
            assert c == core.shared_column_count(m, i + 1, i)
            assert c <= min(m.row_cols(i).size, m.row_cols(i + 1).size)

    def test_errors(self):
        m = core.generate_uniform(4, 4, 0.5, seed=0)
        with pytest.raises(ValueError):
            core.shared_column_count(m, 1, 1)
        with pytest.raises(IndexError):
            core.shared_column_count(m, 0, 9)


class TestCsrValidation:
    def test_bad_row_ptr(self):
        with pytest.raises(ValueError):
            core.CsrMatrix(2, 2, np.array([0, 2, 1]), np.array([0, 1]), np.ones(2))

    def test_unsorted_columns(self):
        with pytest.raises(ValueError):
            core.CsrMatrix(1, 4, np.array([0, 2]), np.array([2, 1]), np.ones(2))

    def test_column_bound(self):
        with pytest.raises(ValueError):
            core.CsrMatrix(1, 2, np.array([0, 1]), np.array([5]), np.ones(1))
