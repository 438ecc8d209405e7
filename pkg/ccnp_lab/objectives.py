"""
Reconstruction NLL and the two InfoNCE objectives.

Both contrastive losses build the full cosine-similarity matrix once and
pick logits out of it with an index matrix, so a batch costs a handful of
tape nodes regardless of its size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from ccnp_lab.exceptions import DegenerateInputError, ShapeError
from ccnp_lab.model.decoder import GaussianPrediction
from ccnp_lab.schemas import LossWeights
from ccnp_lab.tensor import Tensor, ops

LN_2PI = math.log(2.0 * math.pi)


@dataclass
class BatchEmbeddings:
    """
    z_hat/z: (N, z) predicted and observed embeddings of every target row in
    the batch, index-aligned. q_i/q_j: (F, z) view embeddings, one row per
    instantiation. segment: (N,) instantiation id of each target row.
    """

    z_hat: Optional[Tensor] = None
    z: Optional[Tensor] = None
    q_i: Optional[Tensor] = None
    q_j: Optional[Tensor] = None
    segment: Optional[np.ndarray] = None


# ─── Reconstruction ─────────────────────────────────────

def gaussian_nll(prediction: GaussianPrediction, y: Tensor) -> Tensor:
    """Per-point NLL summed over output dims: shape (n,)."""
    if prediction.mu.shape != y.shape:
        raise ShapeError(f"gaussian_nll: mu {prediction.mu.shape} vs targets {y.shape}")
    if np.any(prediction.sigma.data <= 0):
        raise DegenerateInputError("gaussian_nll: sigma must be strictly positive")
    log_sigma = ops.log(prediction.sigma)
    inv_var = ops.exp(ops.scale(log_sigma, -2.0))
    quad = ops.mul(ops.square(ops.sub(y, prediction.mu)), inv_var)
    per_dim = ops.add(ops.add(log_sigma, ops.scale(quad, 0.5)), Tensor(0.5 * LN_2PI))
    return ops.sum(per_dim, axis=1)


def frl_nll(
    predictions: Union[GaussianPrediction, Sequence[GaussianPrediction]],
    targets: Union[np.ndarray, Tensor, Sequence],
) -> Tensor:
    """Mean over all target points of -log N(y; mu, diag sigma^2)."""
    if isinstance(predictions, GaussianPrediction):
        predictions, targets = [predictions], [targets]
    if not predictions or len(predictions) != len(targets):
        raise ShapeError(f"frl_nll: {len(predictions)} predictions for {len(targets)} target sets")
    per_point = []
    for pred, y in zip(predictions, targets):
        y = y if isinstance(y, Tensor) else Tensor(np.asarray(y, dtype=np.float64).reshape(pred.mu.shape))
        per_point.append(gaussian_nll(pred, y))
    return ops.mean(ops.concat(per_point, axis=0))


# ─── Contrastive ────────────────────────────────────────

def _row_log_softmax_first(logits: Tensor) -> Tensor:
    """log softmax(logits)[:, 0] for a (n, k) logit matrix."""
    logp = ops.log(ops.softmax(logits, axis=1))
    n, k = logits.shape
    return ops.gather_rows(ops.reshape(logp, (n * k,)), np.arange(n) * k)


def tcl_loss(batch: BatchEmbeddings, tau: float) -> Tensor:
    """
    Anchor z_hat_t against every observed embedding in the batch; the
    positive is z_t of the same row, all other rows (same or other
    instantiation) are negatives.
    """
    if batch.z_hat is None or batch.z is None:
        raise ShapeError("tcl_loss: batch has no temporal embeddings")
    n = batch.z_hat.shape[0]
    if n < 2 or batch.z.shape[0] != n:
        raise DegenerateInputError(f"tcl_loss: need >= 2 aligned embedded points, got {n}")
    sims = ops.scale(ops.cosine_sim(batch.z_hat, batch.z), 1.0 / tau)
    # rotate each row so the diagonal lands in column 0
    cols = np.arange(n)
    order = (cols[:, None] + cols[None, :]) % n
    logits = ops.gather_rows(ops.reshape(sims, (n * n,)), cols[:, None] * n + order)
    return ops.scale(ops.mean(_row_log_softmax_first(logits)), -1.0)


def fcl_index(n_inst: int) -> np.ndarray:
    """
    Flat indices into the (2F, 2F) view-similarity matrix, one row per
    anchor. Views are ordered [q_i of all F, q_j of all F]. Row layout:
    positive s(a_f, p_f), then for each other f' the triple
    s(a_f, a_f'), s(a_f, p_f'), s(p_f, p_f').
    """
    size = 2 * n_inst
    rows = []
    for first in (0, 1):
        for f in range(n_inst):
            a = f + first * n_inst
            p = f + (1 - first) * n_inst
            row = [a * size + p]
            for g in range(n_inst):
                if g == f:
                    continue
                a2 = g + first * n_inst
                p2 = g + (1 - first) * n_inst
                row += [a * size + a2, a * size + p2, p * size + p2]
            rows.append(row)
    return np.array(rows, dtype=np.int64)


def fcl_loss(batch: BatchEmbeddings, tau: float) -> Tensor:
    """Symmetric InfoNCE over the two views of every instantiation in the batch."""
    if batch.q_i is None or batch.q_j is None:
        raise ShapeError("fcl_loss: batch has no view embeddings")
    n_inst = batch.q_i.shape[0]
    if n_inst < 2:
        raise DegenerateInputError("fcl_loss: need at least 2 instantiations for negatives")
    if batch.q_j.shape != batch.q_i.shape:
        raise ShapeError(f"fcl_loss: view shapes differ {batch.q_i.shape} vs {batch.q_j.shape}")
    views = ops.concat([batch.q_i, batch.q_j], axis=0)
    sims = ops.scale(ops.cosine_sim(views, views), 1.0 / tau)
    size = 2 * n_inst
    logits = ops.gather_rows(ops.reshape(sims, (size * size,)), fcl_index(n_inst))
    return ops.scale(ops.mean(_row_log_softmax_first(logits)), -1.0)


def combined_objective(
    frl: Tensor,
    tcl: Optional[Tensor],
    fcl: Optional[Tensor],
    weights: LossWeights,
) -> Tensor:
    """L_FRL + alpha * L_TCL + beta * L_FCL; absent objectives contribute nothing."""
    total = frl
    if tcl is not None:
        total = ops.add(total, ops.scale(tcl, weights.alpha))
    if fcl is not None:
        total = ops.add(total, ops.scale(fcl, weights.beta))
    return total


# ─── Reference implementations ──────────────────────────

def _cos(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def brute_force_tcl(z_hat: np.ndarray, z: np.ndarray, tau: float) -> float:
    n = len(z_hat)
    losses = []
    for t in range(n):
        logits = np.array([_cos(z_hat[t], z[i]) / tau for i in range(n)])
        losses.append(-(logits[t] - logsumexp(logits)))
    return float(np.mean(losses))


def brute_force_fcl(q_i: np.ndarray, q_j: np.ndarray, tau: float) -> float:
    n = len(q_i)
    losses = []
    for anchor_views, positive_views in ((q_i, q_j), (q_j, q_i)):
        for f in range(n):
            a, p = anchor_views[f], positive_views[f]
            logits = [_cos(a, p) / tau]
            for g in range(n):
                if g != f:
                    logits += [
                        _cos(a, anchor_views[g]) / tau,
                        _cos(a, positive_views[g]) / tau,
                        _cos(p, positive_views[g]) / tau,
                    ]
            logits = np.array(logits)
            losses.append(-(logits[0] - logsumexp(logits)))
    return float(np.mean(losses))
