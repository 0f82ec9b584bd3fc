"""Load balancing: clip over-long blocks and order the work deterministically."""

from __future__ import annotations

import numpy as np

from ecsr.extraction import Block, BlockSet, ExtractionConfig


def clip_threshold(bset: BlockSet, cfg: ExtractionConfig) -> int:
    """Column threshold for one set: twice the mean width, rounded up to a
    chunk multiple, never below one chunk."""
    chunk = cfg.chunk_cols
    if not bset.blocks:
        return chunk
    mean = float(np.mean([b.nnc for b in bset.blocks]))
    return max(chunk, int(np.ceil(2.0 * mean / chunk)) * chunk)


def clip_blocks(bset: BlockSet, cfg: ExtractionConfig, threshold: int | None = None) -> BlockSet:
    """Split every block wider than the threshold into consecutive chunks of
    at most `threshold` columns, cut on chunk_cols boundaries. The chunks
    inherit the row identities, so the nonzero partition is unchanged."""
    if threshold is None:
        limit = clip_threshold(bset, cfg)
    else:
        limit = max(cfg.chunk_cols, int(np.ceil(threshold / cfg.chunk_cols)) * cfg.chunk_cols)
    out = []
    for block in bset.blocks:
        if block.nnc <= limit:
            out.append(block)
            continue
        for start in range(0, block.nnc, limit):
            stop = min(start + limit, block.nnc)
            out.append(
                Block(
                    granularity=block.granularity,
                    row_ids=block.row_ids,
                    col_ids=block.col_ids[start:stop],
                    values=block.values[:, start:stop],
                    inserted=block.inserted[start:stop],
                )
            )
    return BlockSet(bset.granularity, out, vector_size=bset.vector_size)


def reorder_sets(sets: list[BlockSet]) -> list[BlockSet]:
    """Stable-sort blocks by nonzero count descending within each set, then
    the sets themselves by granularity descending. Content is untouched."""
    ordered = []
    for bset in sets:
        blocks = sorted(bset.blocks, key=lambda b: -b.real_nnz)
        ordered.append(BlockSet(bset.granularity, blocks, vector_size=bset.vector_size))
    ordered.sort(key=lambda s: -s.granularity)
    return ordered
