"""
Predictive head and projection heads for the two contrastive objectives.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng
from ccnp_lab.model.batch import SegmentLayout, pair_features, split_context
from ccnp_lab.model.encoder import Branch, EncoderStack
from ccnp_lab.schemas import ModelDims
from ccnp_lab.tensor import MLP, Linear, Module, Tensor, ops


class Heads(Module):
    """
    varphi(x_t, r_T) -> rho_P gives the predicted embedding z_hat_t.
    The ground-truth embedding z_t comes from obs_proj(y_t), or from
    rho_P(phi(y_t)) when the projection head is shared.
    """

    def __init__(self, dims: ModelDims, rng: np.random.Generator):
        self.varphi = MLP([dims.x_dim + dims.hidden, dims.hidden, dims.hidden], rng, final_activation="relu")
        self.rho_P = Linear(dims.hidden, dims.z_dim, rng)
        self.rho_F = Linear(dims.hidden, dims.z_dim, rng)
        if dims.shared_projection:
            self.phi = Linear(dims.y_dim, dims.hidden, rng)
        else:
            self.obs_proj = Linear(dims.y_dim, dims.z_dim, rng)
        self.dims = dims

    def predicted(self, x_t: Tensor, r_T: Tensor) -> Tensor:
        return self.rho_P(self.varphi(ops.concat([x_t, r_T], axis=1)))

    def observed(self, y_t: Tensor) -> Tensor:
        if self.dims.shared_projection:
            return self.rho_P(ops.relu(self.phi(y_t)))
        return self.obs_proj(y_t)

    def tcl_batch(self, x_t: np.ndarray, r_T: Tensor, segment: np.ndarray, y_t: np.ndarray) -> tuple[Tensor, Tensor]:
        """(z_hat, z) for every flattened target row; r_T is (B, d)."""
        x = Tensor(np.asarray(x_t, dtype=np.float64).reshape(-1, self.dims.x_dim))
        y = Tensor(np.asarray(y_t, dtype=np.float64).reshape(-1, self.dims.y_dim))
        return self.predicted(x, ops.gather_rows(r_T, segment)), self.observed(y)


def tcl_embed(heads: Heads, x_t: float, r_T: Tensor, y_t) -> tuple[Tensor, Tensor]:
    """Single target point: both embeddings have shape (z,)."""
    r = ops.reshape(r_T, (1, heads.dims.hidden))
    z_hat, z = heads.tcl_batch(np.array([x_t]), r, np.zeros(1, dtype=np.int64), np.asarray(y_t))
    return ops.reshape(z_hat, (heads.dims.z_dim,)), ops.reshape(z, (heads.dims.z_dim,))


def fcl_views(stack: EncoderStack, heads: Heads, views: SegmentLayout) -> tuple[Tensor, Tensor]:
    """Project the 2B context halves through branch F and rho_F: q_i, q_j of shape (B, z)."""
    q = heads.rho_F(stack.represent(Branch.F, views))
    half = views.batch_size // 2
    return ops.gather_rows(q, np.arange(half)), ops.gather_rows(q, np.arange(half, 2 * half))


def fcl_embed(
    stack: EncoderStack,
    heads: Heads,
    inst: Instantiation,
    context: Sequence[int],
    rng_seed: SeedLike,
) -> tuple[Tensor, Tensor, tuple[np.ndarray, np.ndarray]]:
    """Split one context set into two disjoint views; returns (q_i, q_j, (half_i, half_j))."""
    halves = split_context(np.asarray(context), make_rng(rng_seed))
    layout = SegmentLayout([pair_features(inst, halves[0]), pair_features(inst, halves[1])])
    q_i, q_j = fcl_views(stack, heads, layout)
    z = heads.dims.z_dim
    return ops.reshape(q_i, (z,)), ops.reshape(q_j, (z,)), halves

