"""
Gaussian decoder: trunk over concat(x_t, r_C, r_T, r_F), linear mean, floored scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccnp_lab.exceptions import ShapeError
from ccnp_lab.schemas import ModelDims
from ccnp_lab.tensor import MLP, Linear, Module, Tensor, ops

SIGMA_FLOOR = 0.1
SIGMA_GAIN = 0.9


@dataclass
class GaussianPrediction:
    mu: Tensor
    sigma: Tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mu.shape


@dataclass
class RepresentationBundle:
    """r_C, r_T, r_F: (B, d) each, or (d,) for a single instantiation."""

    r_C: Tensor
    r_T: Tensor
    r_F: Tensor

    def concat(self) -> Tensor:
        return ops.concat([self.r_C, self.r_T, self.r_F], axis=-1)


def gaussian_scale(pre_sigma: Tensor) -> Tensor:
    """0.9 * softplus(pre) + 0.1, strictly above the 0.1 floor."""
    floor = Tensor(np.full(pre_sigma.shape, SIGMA_FLOOR))
    return ops.add(ops.scale(ops.softplus(pre_sigma), SIGMA_GAIN), floor)


class DecoderStack(Module):
    def __init__(self, dims: ModelDims, rng: np.random.Generator):
        widths = [dims.x_dim + 3 * dims.hidden] + [dims.hidden] * dims.decoder_layers
        self.g = MLP(widths, rng, final_activation="relu")
        self.mu_head = Linear(dims.hidden, dims.y_dim, rng)
        self.sigma_head = Linear(dims.hidden, dims.y_dim, rng)
        self.dims = dims

    def __call__(self, x_t: Tensor, reps: Tensor) -> GaussianPrediction:
        """x_t: (n, x_dim); reps: (n, 3d) representation row for each target."""
        hidden = self.g(ops.concat([x_t, reps], axis=1))
        return GaussianPrediction(mu=self.mu_head(hidden), sigma=gaussian_scale(self.sigma_head(hidden)))

    def decode_batch(self, x_t: np.ndarray, bundle: RepresentationBundle, segment: np.ndarray) -> GaussianPrediction:
        """Targets flattened across the batch; `segment` maps each target to its instantiation."""
        reps = ops.gather_rows(bundle.concat(), segment)
        return self(Tensor(np.asarray(x_t, dtype=np.float64).reshape(-1, self.dims.x_dim)), reps)


def decode(dec: DecoderStack, x_t, bundle: RepresentationBundle) -> GaussianPrediction:
    """Predict at query indices x_t (shape (n,) or (n, 1)) from one instantiation's bundle."""
    x_t = np.asarray(x_t, dtype=np.float64).reshape(-1, dec.dims.x_dim)
    for name in ("r_C", "r_T", "r_F"):
        r = getattr(bundle, name)
        if r.shape != (dec.dims.hidden,):
            raise ShapeError(f"decode: {name} must have shape ({dec.dims.hidden},), got {r.shape}")
    reps = ops.reshape(bundle.concat(), (1, 3 * dec.dims.hidden))
    return dec(Tensor(x_t), ops.gather_rows(reps, np.zeros(len(x_t), dtype=np.int64)))
