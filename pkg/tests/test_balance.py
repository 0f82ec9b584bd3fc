"""Block clipping and deterministic reordering."""

import numpy as np
import pytest

from ecsr.balance import clip_blocks, clip_threshold, reorder_sets
from ecsr.extraction import Block, BlockSet, ExtractionConfig

CFG = ExtractionConfig(warp_size=32, vector_size=4, delta_bits=8)


def make_block(g, nnc, tag=0.0):
    cols = np.arange(nnc, dtype=np.int64) * 2  # gaps of 2, well within range
    values = np.full((g, nnc), 1.0 + tag)
    return Block(g, np.arange(g), cols, values)


def make_set(g, widths):
    return BlockSet(g, [make_block(g, w, tag=i) for i, w in enumerate(widths)],
                    vector_size=4)


class TestClip:
    def test_unchanged_under_threshold(self):
        bset = make_set(2, [128, 128, 128])
        assert clip_threshold(bset, CFG) == 256
        clipped = clip_blocks(bset, CFG)
        assert [b.nnc for b in clipped.blocks] == [128, 128, 128]

    def test_long_block_into_four_chunks(self):
        # mean 124 -> threshold rounds 248 up to 256
        bset = make_set(1, [1024] + [64] * 15)
        assert clip_threshold(bset, CFG) == 256
        clipped = clip_blocks(bset, CFG)
        assert [b.nnc for b in clipped.blocks][:4] == [256, 256, 256, 256]
        assert max(b.nnc for b in clipped.blocks) <= 256

    def test_chunks_reassemble_block(self):
        block = make_block(2, 640)
        bset = BlockSet(2, [block], vector_size=4)
        clipped = clip_blocks(bset, CFG, threshold=256)
        cols = np.concatenate([b.col_ids for b in clipped.blocks])
        vals = np.hstack([b.values for b in clipped.blocks])
        np.testing.assert_array_equal(cols, block.col_ids)
        np.testing.assert_array_equal(vals, block.values)
        for b in clipped.blocks:
            np.testing.assert_array_equal(b.row_ids, block.row_ids)

    @pytest.mark.parametrize("seed", range(6))
    def test_bound_after_clipping(self, seed):
        rng = np.random.default_rng(seed)
        widths = rng.integers(1, 2000, size=12).tolist()
        bset = make_set(1, widths)
        mean = float(np.mean(widths))
        clipped = clip_blocks(bset, CFG)
        assert max(b.nnc for b in clipped.blocks) / mean <= 2 + CFG.chunk_cols / mean

    def test_override_rounds_up(self):
        bset = make_set(1, [1000])
        clipped = clip_blocks(bset, CFG, threshold=300)
        # 300 rounds up to 384
        assert max(b.nnc for b in clipped.blocks) <= 384
        assert clipped.blocks[0].nnc == 384

    def test_empty_set(self):
        bset = BlockSet(2, [], vector_size=4)
        assert clip_blocks(bset, CFG).blocks == []


class TestReorder:
    def test_blocks_sorted_by_nnz_descending(self):
        bset = make_set(1, [4, 16, 8])
        out = reorder_sets([bset])[0]
        assert [b.nnc for b in out.blocks] == [16, 8, 4]

    def test_sets_sorted_by_granularity_descending(self):
        sets = [make_set(1, [4]), make_set(4, [4]), make_set(2, [4])]
        out = reorder_sets(sets)
        assert [s.granularity for s in out] == [4, 2, 1]

    def test_stable_for_equal_nnz(self):
        blocks = [make_block(1, 8, tag=i) for i in range(3)]
        out = reorder_sets([BlockSet(1, blocks, vector_size=4)])[0]
        assert [b.values[0, 0] for b in out.blocks] == [1.0, 2.0, 3.0]

    def test_content_untouched(self):
        sets = [make_set(2, [12, 4, 8]), make_set(1, [4, 20])]
        out = reorder_sets(sets)
        before = sorted((s.granularity, b.nnc) for s in sets for b in s.blocks)
        after = sorted((s.granularity, b.nnc) for s in out for b in s.blocks)
        assert before == after

    def test_sort_uses_real_nnz(self):
        # an inserted zero column must not count toward the sort key
        a = Block(1, [0], np.array([0, 4, 8]), np.ones((1, 3)),
                  inserted=np.array([False, True, False]))
        b = Block(1, [1], np.array([0, 2, 4]), np.ones((1, 3)))
        out = reorder_sets([BlockSet(1, [a, b], vector_size=4)])[0]
        assert out.blocks[0].row_ids.tolist() == [1]
