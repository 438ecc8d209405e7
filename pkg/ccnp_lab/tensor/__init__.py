"""
Minimal reverse-mode autodiff: tensors, ops, modules, Adam.
"""

from ccnp_lab.tensor.autograd import Tape, TapeNode, Tensor, backward, is_grad_enabled, no_grad
from ccnp_lab.tensor.nn import MLP, Linear, Module
from ccnp_lab.tensor.ops import (
    add,
    as_tensor,
    concat,
    cosine_sim,
    exp,
    gather_rows,
    log,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    scale,
    softmax,
    softplus,
    square,
    sub,
    transpose,
)
from ccnp_lab.tensor.ops import sum as sum_  # noqa: F401
from ccnp_lab.tensor.optim import AdamState, adam_step, clip_grad_norm

__all__ = [
    "Tape", "TapeNode", "Tensor", "backward", "is_grad_enabled", "no_grad",
    "MLP", "Linear", "Module",
    "add", "as_tensor", "concat", "cosine_sim", "exp", "gather_rows", "log", "matmul",
    "mean", "mul", "relu", "reshape", "scale", "softmax", "softplus", "square", "sub",
    "sum_", "transpose",
    "AdamState", "adam_step", "clip_grad_norm",
]
