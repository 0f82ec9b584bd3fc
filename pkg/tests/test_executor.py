"""Warp-emulated SpMV: oracle equivalence, tracing, coalescing, cost model."""

import numpy as np
import pytest

from ecsr import core
from ecsr.errors import ContainerError
from ecsr.executor import (
    access_cost,
    check_coalescing,
    spmv_ec,
    spmv_ec_traced,
    validate_container,
)
from ecsr.extraction import Block, BlockSet, ExtractionConfig, extract_blocks
from ecsr.storage import convert_csr, encode_ec_csr, split_one_grained

from conftest import rel_err

CFG = ExtractionConfig(warp_size=2, vector_size=2, delta_bits=8)


def build(m, cfg=CFG, **kwargs):
    return convert_csr(m, cfg, **kwargs)


class TestSpmv:
    def test_identity(self):
        m = core.csr_from_coo(6, 6, range(6), range(6), [1.0] * 6)
        x = np.random.default_rng(0).uniform(-1, 1, 6)
        np.testing.assert_allclose(spmv_ec(build(m), x), x, rtol=0, atol=0)

    def test_two_grained_block_unit_vector(self):
        rows, cols, vals = [], [], []
        for r in (0, 1):
            for c in (2, 4, 5, 6):
                rows.append(r)
                cols.append(c)
                vals.append(1.0)
        m = core.csr_from_coo(2, 7, rows, cols, vals)
        x = np.zeros(7)
        x[4] = 1.0
        y = spmv_ec(build(m), x)
        assert y.tolist() == [1.0, 1.0]

    @pytest.mark.parametrize("seed", range(8))
    def test_oracle_equivalence_f64(self, seed):
        m = core.generate_uniform(40, 56, 0.6, seed=seed)
        x = np.random.default_rng(seed).uniform(-1, 1, 56)
        assert rel_err(spmv_ec(build(m), x), core.spmv_oracle(m, x)) <= 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_oracle_equivalence_f32(self, seed):
        m = core.generate_uniform(40, 56, 0.6, seed=seed)
        x = np.random.default_rng(seed).uniform(-1, 1, 56)
        ec = build(m, dtype=np.float32)
        assert rel_err(spmv_ec(ec, x.astype(np.float32)), core.spmv_oracle(m, x)) <= 1e-5

    def test_repeat_runs_bit_identical(self):
        m = core.generate_uniform(30, 30, 0.5, seed=3)
        ec = build(m)
        x = np.random.default_rng(1).uniform(-1, 1, 30)
        a = spmv_ec(ec, x)
        b = spmv_ec(ec, x)
        assert np.array_equal(a, b)

    def test_dimension_mismatch(self):
        m = core.generate_uniform(4, 6, 0.5, seed=0)
        with pytest.raises(ValueError):
            spmv_ec(build(m), np.ones(5))

    def test_malformed_container_rejected(self):
        m = core.generate_uniform(16, 16, 0.4, seed=2)
        ec = build(m)
        ec.sets[0].block_indptr[-1] += CFG.chunk_cols
        with pytest.raises(ContainerError):
            spmv_ec(ec, np.ones(16))

    def test_out_of_range_decode_rejected(self):
        m = core.generate_uniform(16, 16, 0.4, seed=2)
        ec = build(m)
        ec.sets[0].base_indices[0] = 15
        ec.sets[0].delta_indices[:] = 200
        with pytest.raises(ContainerError):
            spmv_ec(ec, np.ones(16))


class TestTrace:
    def test_traced_matches_untraced(self):
        m = core.generate_uniform(32, 40, 0.5, seed=4)
        ec = build(m)
        x = np.random.default_rng(2).uniform(-1, 1, 40)
        y_fast = spmv_ec(ec, x)
        y_tr, _ = spmv_ec_traced(ec, x)
        assert rel_err(y_tr, y_fast) <= 1e-12

    def test_span_shapes(self):
        m = core.generate_uniform(24, 32, 0.5, seed=5)
        ec = build(m)
        x = np.random.default_rng(3).uniform(-1, 1, 32)
        _, trace = spmv_ec_traced(ec, x)
        widths = {}
        for si, s in enumerate(ec.sets):
            widths[si] = (ec.warp_size * s.vector_size, s.granularity)
        for rec in trace:
            w, g = widths[rec.set_index]
            if rec.array == "deltas":
                assert rec.span == w
                assert rec.start % w == 0
            elif rec.array == "values":
                assert rec.span == w * g
                assert rec.start % (w * g) == 0
            elif rec.array == "x":
                assert rec.span == 1

    def test_x_read_once_per_column_per_warp(self):
        m = core.generate_uniform(24, 32, 0.5, seed=6)
        ec = build(m)
        _, trace = spmv_ec_traced(ec, np.ones(32))
        per_warp = {}
        for rec in trace:
            if rec.array == "x":
                per_warp.setdefault(rec.warp, 0)
                per_warp[rec.warp] += 1
        warp = 0
        for s in ec.sets:
            for b in range(s.num_blocks):
                stored = int(s.block_indptr[b + 1] - s.block_indptr[b])
                assert per_warp[warp] == stored
                warp += 1

    def test_coalescing_clean_on_pipeline_output(self):
        for seed in range(4):
            m = core.generate_uniform(28, 44, 0.6, seed=seed)
            ec = build(m)
            _, trace = spmv_ec_traced(ec, np.ones(44))
            assert check_coalescing(ec, trace) == []

    def test_coalescing_flags_bad_span(self):
        m = core.generate_uniform(16, 16, 0.4, seed=7)
        ec = build(m)
        _, trace = spmv_ec_traced(ec, np.ones(16))
        rec = next(r for r in trace if r.array == "deltas")
        bad = type(rec)(rec.warp, rec.step, "deltas", rec.set_index,
                        rec.start + 1, rec.span)
        trace.records.append(bad)
        assert check_coalescing(ec, trace)


class TestBalanceInvariance:
    @pytest.mark.parametrize("seed", range(4))
    def test_spmv_unchanged_by_clip_and_reorder(self, seed):
        m = core.generate_uniform(36, 52, 0.5, seed=seed)
        x = np.random.default_rng(seed).uniform(-1, 1, 52)
        balanced = spmv_ec(convert_csr(m, CFG), x)
        raw_sets = []
        for bset in extract_blocks(m, CFG):
            if bset.granularity == 1:
                long_set, short_set = split_one_grained(bset, CFG)
                raw_sets += [s for s in (long_set, short_set) if s.blocks]
            else:
                raw_sets.append(bset)
        plain = encode_ec_csr(raw_sets, CFG, m.num_rows, m.num_cols)
        unbalanced = spmv_ec(plain, x)
        assert rel_err(balanced, unbalanced) <= 1e-12


class TestAccessCost:
    def test_four_grained_block(self):
        block = Block(4, np.arange(4), np.arange(8) * 2, np.ones((4, 8)))
        cost = access_cost([BlockSet(4, [block], vector_size=2)])
        assert cost.vector_units == 8.0
        assert cost.unblocked_units == 32.0

    def test_all_one_grained_equals_nnz(self):
        m = core.generate_uniform(20, 24, 0.6, seed=8)
        cfg = ExtractionConfig(warp_size=32, vector_size=4, delta_bits=8,
                               max_levels=0)
        sets = extract_blocks(m, cfg)
        assert access_cost(sets).vector_units == m.nnz

    def test_inserted_zeros_not_counted(self):
        block = Block(1, [0], np.array([0, 255, 510, 600]),
                      np.array([[2.0, 0.0, 0.0, 3.0]]),
                      inserted=np.array([False, True, True, False]))
        cost = access_cost([BlockSet(1, [block], vector_size=1)])
        assert cost.vector_units == 2.0

    @pytest.mark.parametrize("seed", range(4))
    def test_monotone_and_strict_when_extracted(self, seed):
        m = core.generate_uniform(32, 48, 0.5, seed=seed)
        sets = extract_blocks(m, CFG)
        cost = access_cost(sets, CFG)
        assert cost.vector_units <= m.nnz
        if any(s.granularity >= 2 for s in sets):
            assert cost.vector_units < m.nnz
        assert cost.index_bytes is not None and cost.index_bytes > 0

    def test_index_bytes_formula(self):
        block = Block(2, [0, 1], np.arange(8), np.ones((2, 8)))
        cfg = ExtractionConfig(warp_size=4, vector_size=2, delta_bits=8)
        cost = access_cost([BlockSet(2, [block], vector_size=2)], cfg)
        assert cost.index_bytes == 4 * 4 + 8

    def test_validate_accepts_pipeline_output(self):
        m = core.generate_uniform(20, 20, 0.5, seed=9)
        validate_container(build(m))
