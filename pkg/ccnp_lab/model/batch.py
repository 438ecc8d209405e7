"""
Batch layout for variable-size context sets.

Context rows of every instantiation in a batch are stacked into one flat
matrix so the pair encoders run once; SegmentLayout then knows how to pad
those rows into a (B, C_max, d) block, mask the padding out of attention,
and average only the real rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng
from ccnp_lab.datagen.splits import ContextTargetSplit
from ccnp_lab.exceptions import DegenerateInputError, ShapeError
from ccnp_lab.tensor import Tensor, gather_rows

MASKED = -1e30


def pair_features(inst: Instantiation, indices: np.ndarray) -> np.ndarray:
    """concat(x, y) rows for the given indices: (n, 1 + d_y)."""
    idx = np.asarray(indices, dtype=np.int64)
    return np.concatenate([inst.x[idx, None], inst.y[idx]], axis=1)


class SegmentLayout:
    """Row bookkeeping for B segments of possibly different lengths."""

    def __init__(self, segments: Sequence[np.ndarray]):
        if not segments:
            raise DegenerateInputError("SegmentLayout: no segments")
        counts = np.array([len(s) for s in segments], dtype=np.int64)
        if counts.min() < 1:
            raise DegenerateInputError("SegmentLayout: empty context set")
        widths = {np.asarray(s).shape[1] for s in segments}
        if len(widths) != 1:
            raise ShapeError(f"SegmentLayout: rows have differing widths {sorted(widths)}")

        self.features = np.concatenate([np.asarray(s, dtype=np.float64) for s in segments], axis=0)
        self.counts = counts
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        width = int(counts.max())
        cols = np.arange(width)
        self.mask = cols[None, :] < counts[:, None]
        # padded slots point at the segment's first row; they are masked anyway
        self.index = np.where(self.mask, starts[:, None] + cols[None, :], starts[:, None])

    @property
    def batch_size(self) -> int:
        return len(self.counts)

    @property
    def width(self) -> int:
        return self.index.shape[1]

    def pad(self, rows: Tensor) -> Tensor:
        """(N, d) flat rows -> (B, C_max, d)."""
        return gather_rows(rows, self.index)

    def key_mask(self, heads: int) -> Tensor:
        """Additive attention mask (B, heads, C_max, C_max) hiding padded keys."""
        keys = np.where(self.mask, 0.0, MASKED)[:, None, None, :]
        return Tensor(np.broadcast_to(keys, (self.batch_size, heads, self.width, self.width)).copy())

    def mean_weights(self, dim: int) -> Tensor:
        """(B, C_max, dim) weights equal to 1/count on real rows and 0 on padding."""
        w = self.mask / self.counts[:, None]
        return Tensor(np.broadcast_to(w[:, :, None], (self.batch_size, self.width, dim)).copy())


@dataclass
class EpisodeBatch:
    """
    One batch of instantiations with their context/target splits.

    Targets are flattened across the batch; target_segment[i] tells which
    instantiation target row i belongs to. views holds the 2B context halves
    for the function-contrastive objective (first B rows view one).
    """

    context: SegmentLayout
    target_x: np.ndarray
    target_y: np.ndarray
    target_segment: np.ndarray
    view_halves: Optional[list[tuple[np.ndarray, np.ndarray]]] = None
    views: Optional[SegmentLayout] = None

    @property
    def batch_size(self) -> int:
        return self.context.batch_size

    @classmethod
    def build(
        cls,
        insts: Sequence[Instantiation],
        splits: Sequence[ContextTargetSplit],
        view_seed: Optional[SeedLike] = None,
    ) -> "EpisodeBatch":
        if len(insts) != len(splits):
            raise ShapeError(f"EpisodeBatch: {len(insts)} instantiations but {len(splits)} splits")
        context = SegmentLayout([pair_features(inst, s.context) for inst, s in zip(insts, splits)])
        target_x = np.concatenate([inst.x[s.target, None] for inst, s in zip(insts, splits)], axis=0)
        target_y = np.concatenate([inst.y[s.target] for inst, s in zip(insts, splits)], axis=0)
        target_segment = np.concatenate(
            [np.full(len(s.target), b, dtype=np.int64) for b, s in enumerate(splits)]
        )
        batch = cls(context=context, target_x=target_x, target_y=target_y, target_segment=target_segment)

        if view_seed is not None:
            rng = make_rng(view_seed)
            halves = [split_context(s.context, rng) for s in splits]
            first = [pair_features(inst, h[0]) for inst, h in zip(insts, halves)]
            second = [pair_features(inst, h[1]) for inst, h in zip(insts, halves)]
            batch.view_halves = halves
            batch.views = SegmentLayout(first + second)
        return batch


def split_context(
    context: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Two disjoint non-empty halves of a context index set (floor/ceil sizes)."""
    context = np.asarray(context, dtype=np.int64)
    if len(context) < 2:
        raise DegenerateInputError(
            f"need at least 2 context points to form two views, got {len(context)}"
        )
    shuffled = rng.permutation(context)
    cut = len(context) // 2
    return np.sort(shuffled[:cut]), np.sort(shuffled[cut:])
