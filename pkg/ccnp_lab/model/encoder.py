"""
Pair encoders and aggregation for the three representation branches.

Branch C feeds reconstruction, branch T the temporal-contrastive head and
branch F the function-contrastive head. The index featurizer is the
identity: each pair encoder consumes concat(x, y) directly.
"""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from ccnp_lab.datagen.instances import Instantiation
from ccnp_lab.exceptions import DegenerateInputError, ShapeError
from ccnp_lab.model.attention import MultiHeadAttention
from ccnp_lab.model.batch import SegmentLayout, pair_features
from ccnp_lab.schemas import ModelDims
from ccnp_lab.tensor import MLP, Module, Tensor, ops


class Branch(str, enum.Enum):
    C = "C"
    T = "T"
    F = "F"


class EncoderStack(Module):
    def __init__(self, dims: ModelDims, rng: np.random.Generator, use_attention: bool = True):
        widths = [dims.x_dim + dims.y_dim] + [dims.hidden] * dims.encoder_layers
        self.h_C = MLP(widths, rng)
        self.attn_C = MultiHeadAttention(dims.hidden, dims.heads, rng)
        self.h_T = MLP(widths, rng)
        self.attn_T = MultiHeadAttention(dims.hidden, dims.heads, rng)
        self.h_F = MLP(widths, rng)
        self.attn_F = MultiHeadAttention(dims.hidden, dims.heads, rng)
        self.dims = dims
        self.use_attention = use_attention

    def encoder(self, branch: "Branch | str") -> MLP:
        return getattr(self, f"h_{Branch(branch).value}")

    def attention(self, branch: "Branch | str") -> MultiHeadAttention:
        return getattr(self, f"attn_{Branch(branch).value}")

    def pool(self, branch: "Branch | str", rows: Tensor, layout: SegmentLayout) -> Tensor:
        """Flat encoded rows (N, d) -> one d-vector per segment (B, d)."""
        padded = layout.pad(rows)
        if self.use_attention:
            return self.attention(branch).pool(padded, layout)
        return ops.sum(ops.mul(padded, layout.mean_weights(self.dims.hidden)), axis=1)

    def represent(self, branch: "Branch | str", layout: SegmentLayout) -> Tensor:
        rows = self.encoder(branch)(Tensor(layout.features))
        return self.pool(branch, rows, layout)


def encode_context(stack: EncoderStack, branch: "Branch | str", inst: Instantiation, context: Sequence[int]) -> Tensor:
    """Per-row representations r_c = h(x_c, y_c): shape (|I_C|, d)."""
    context = np.asarray(context, dtype=np.int64)
    if context.size == 0:
        raise DegenerateInputError("encode_context: empty context set")
    return stack.encoder(branch)(Tensor(pair_features(inst, context)))


def aggregate(stack: EncoderStack, branch: "Branch | str", rows: Tensor) -> Tensor:
    """Attention (or plain mean) over the rows of one context set: shape (d,)."""
    if rows.ndim != 2:
        raise ShapeError(f"aggregate: expected (n, d) rows, got {rows.shape}")
    if rows.shape[0] == 0:
        raise DegenerateInputError("aggregate: no rows to aggregate")
    layout = SegmentLayout([np.zeros((rows.shape[0], 1))])
    return ops.reshape(stack.pool(branch, rows, layout), (rows.shape[1],))
