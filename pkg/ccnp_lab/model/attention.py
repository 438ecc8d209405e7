"""
Multi-head scaled dot-product self-attention over padded context rows.
"""

from __future__ import annotations

import math

import numpy as np

from ccnp_lab.model.batch import SegmentLayout
from ccnp_lab.tensor import Linear, Module, Tensor, ops


class MultiHeadAttention(Module):
    """
    softmax(Q K^T / sqrt(head_dim)) V per head, heads concatenated, then the
    fusion map H. Padded keys are masked; padded query rows are discarded by
    the masked mean that follows.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator):
        self.w_q = Linear(dim, dim, rng, bias=False)
        self.w_k = Linear(dim, dim, rng, bias=False)
        self.w_v = Linear(dim, dim, rng, bias=False)
        self.fuse = Linear(dim, dim, rng)
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads

    def _split_heads(self, x: Tensor, batch: int, width: int) -> Tensor:
        x = ops.reshape(x, (batch, width, self.heads, self.head_dim))
        return ops.transpose(x, (0, 2, 1, 3))

    def attend(self, padded: Tensor, layout: SegmentLayout) -> Tensor:
        """(B, C, d) -> (B, C, d) before head fusion."""
        batch, width = layout.batch_size, layout.width
        q = self._split_heads(self.w_q(padded), batch, width)
        k = self._split_heads(self.w_k(padded), batch, width)
        v = self._split_heads(self.w_v(padded), batch, width)

        scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(self.head_dim))
        weights = ops.softmax(ops.add(scores, layout.key_mask(self.heads)), axis=-1)
        out = ops.matmul(weights, v)
        out = ops.transpose(out, (0, 2, 1, 3))
        return ops.reshape(out, (batch, width, self.dim))

    def pool(self, padded: Tensor, layout: SegmentLayout) -> Tensor:
        """Attention, masked mean over rows, then H. H is affine so it commutes with the mean."""
        attended = self.attend(padded, layout)
        pooled = ops.sum(ops.mul(attended, layout.mean_weights(self.dim)), axis=1)
        return self.fuse(pooled)
