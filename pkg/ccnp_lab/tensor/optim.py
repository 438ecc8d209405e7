"""
Adam with bias correction, plus global-norm gradient clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ccnp_lab.exceptions import ShapeError, TrainingError
from ccnp_lab.tensor.autograd import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, Tensor],
    state: AdamState,
    zero_grad: bool = False,
) -> None:
    """One Adam update over `params`; grads are left in place unless asked."""
    for name, p in params.items():
        if p.grad is None:
            raise TrainingError(f"adam_step: parameter '{name}' has no gradient")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t

    for name, p in params.items():
        g = p.grad
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        elif m.shape != p.data.shape:
            raise ShapeError(f"adam_step: moment buffer for '{name}' has shape {m.shape}, parameter {p.shape}")
        v = state.v[name]

        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g

        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

        if zero_grad:
            p.zero_grad()


def clip_grad_norm(params: Mapping[str, Tensor], max_norm: float) -> float:
    """Scale grads in place so their global L2 norm is at most max_norm.

    Returns the norm before clipping.
    """
    total = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params.values() if p.grad is not None))
    if total > max_norm > 0:
        factor = max_norm / (total + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad *= factor
    return total
