"""
Differentiable forward ops.

Broadcasting is deliberately narrow: two operands must either have equal
shapes, or one of them is a scalar (shape () or (1,)), or one shape is a
trailing suffix of the other (leading-batch broadcast, e.g. a (d,) bias added
to (n, d) rows, or a (k, m) weight applied to a (h, n, k) stack).
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ccnp_lab.exceptions import DegenerateInputError, ShapeError
from ccnp_lab.tensor.autograd import Tensor

Axis = Optional[Union[int, tuple[int, ...]]]


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


# ─── Broadcasting helpers ───────────────────────────────


def _is_scalar(shape: tuple[int, ...]) -> bool:
    return shape == () or shape == (1,)


def _broadcast_shape(op: str, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if a == b:
        return a
    if _is_scalar(a):
        return b
    if _is_scalar(b):
        return a
    if len(a) < len(b) and b[len(b) - len(a):] == a:
        return b
    if len(b) < len(a) and a[len(a) - len(b):] == b:
        return a
    raise ShapeError(
        f"{op}: cannot broadcast shapes {a} and {b} "
        f"(only scalar and leading-batch broadcasting are supported)"
    )


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if _is_scalar(shape):
        return np.asarray(grad.sum()).reshape(shape)
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead)))


# ─── Elementwise binary ─────────────────────────────────


def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a.shape, b.shape)
    data = a.data + b.data

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op("add", data, (a, b), _backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a.shape, b.shape)
    data = a.data - b.data

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op("sub", data, (a, b), _backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a.shape, b.shape)
    data = a.data * b.data

    def _backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._from_op("mul", data, (a, b), _backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    data = a.data * c

    def _backward(g):
        return (g * c,)

    return Tensor._from_op("scale", data, (a,), _backward)


# ─── Linear algebra ─────────────────────────────────────


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands must be at least 2-D, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, got {a.shape} and {b.shape}")
    lead_a, lead_b = a.shape[:-2], b.shape[:-2]
    if lead_a and lead_b and lead_a != lead_b:
        raise ShapeError(
            f"matmul: batch dimensions differ, got {a.shape} and {b.shape} "
            f"(only leading-batch broadcasting is supported)"
        )
    data = np.matmul(a.data, b.data)

    def _backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._from_op("matmul", data, (a, b), _backward)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"transpose: axes {axes} are not a permutation for shape {a.shape}")
    inverse = tuple(np.argsort(axes))
    data = np.transpose(a.data, axes)

    def _backward(g):
        return (np.transpose(g, inverse),)

    return Tensor._from_op("transpose", data, (a,), _backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = a.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {tuple(shape)}") from e

    def _backward(g):
        return (g.reshape(a.shape),)

    return Tensor._from_op("reshape", data, (a,), _backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: needs at least one tensor")
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or t.shape[:ax] + t.shape[ax + 1:] != tensors[0].shape[:ax] + tensors[0].shape[ax + 1:]:
            raise ShapeError(
                f"concat: shapes {tensors[0].shape} and {t.shape} differ outside axis {axis}"
            )
    data = np.concatenate([t.data for t in tensors], axis=ax)
    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=ax))

    return Tensor._from_op("concat", data, tuple(tensors), _backward)


def gather_rows(a: Tensor, indices) -> Tensor:
    """Index along axis 0; `indices` may have any integer shape."""
    idx = np.asarray(indices, dtype=np.int64)
    if a.ndim == 0:
        raise ShapeError("gather_rows: cannot index a 0-D tensor")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeError(f"gather_rows: indices out of range for axis 0 of shape {a.shape}")
    data = a.data[idx]

    def _backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor._from_op("gather_rows", data, (a,), _backward)


# ─── Reductions ─────────────────────────────────────────


def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axes(axis, a.ndim)
    data = np.sum(a.data, axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._from_op("sum", np.asarray(data), (a,), _backward)


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    if count == 0:
        raise ShapeError(f"mean: empty reduction over axis {axis} of shape {a.shape}")
    data = np.mean(a.data, axis=axes, keepdims=keepdims)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return Tensor._from_op("mean", np.asarray(data), (a,), _backward)


# ─── Elementwise unary ──────────────────────────────────


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    data = np.where(mask, a.data, 0.0)

    def _backward(g):
        return (g * mask,)

    return Tensor._from_op("relu", data, (a,), _backward)


def softplus(a: Tensor) -> Tensor:
    data = np.logaddexp(0.0, a.data)

    def _backward(g):
        return (g * expit(a.data),)

    return Tensor._from_op("softplus", data, (a,), _backward)


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.log(a.data)

    def _backward(g):
        return (g / a.data,)

    return Tensor._from_op("log", data, (a,), _backward)


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        data = np.exp(a.data)

    def _backward(g):
        return (g * data,)

    return Tensor._from_op("exp", data, (a,), _backward)


def square(a: Tensor) -> Tensor:
    data = a.data * a.data

    def _backward(g):
        return (2.0 * a.data * g,)

    return Tensor._from_op("square", data, (a,), _backward)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / np.sum(e, axis=axis, keepdims=True)

    def _backward(g):
        inner = np.sum(g * data, axis=axis, keepdims=True)
        return (data * (g - inner),)

    return Tensor._from_op("softmax", data, (a,), _backward)


# ─── Similarity ─────────────────────────────────────────


def cosine_sim(a: Tensor, b: Tensor) -> Tensor:
    """Pairwise cosine similarity.

    (m, k) x (n, k) -> (m, n); a 1-D operand is treated as a single row and
    its axis is dropped from the result, so two vectors give a scalar.
    """
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"cosine_sim: operands must be 1-D or 2-D, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-1]:
        raise ShapeError(f"cosine_sim: feature dimensions differ, got {a.shape} and {b.shape}")
    A = a.data.reshape(-1, a.shape[-1])
    B = b.data.reshape(-1, b.shape[-1])
    na = np.linalg.norm(A, axis=1, keepdims=True)
    nb = np.linalg.norm(B, axis=1, keepdims=True)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise DegenerateInputError("cosine_sim: zero-norm embedding has no direction")
    An, Bn = A / na, B / nb
    S = An @ Bn.T
    out_shape = (() if a.ndim == 1 else (A.shape[0],)) + (() if b.ndim == 1 else (B.shape[0],))
    data = S.reshape(out_shape)

    def _backward(g):
        G = g.reshape(S.shape)
        dAn = G @ Bn
        dBn = G.T @ An
        dA = (dAn - An * np.sum(dAn * An, axis=1, keepdims=True)) / na
        dB = (dBn - Bn * np.sum(dBn * Bn, axis=1, keepdims=True)) / nb
        return dA.reshape(a.shape), dB.reshape(b.shape)

    return Tensor._from_op("cosine_sim", data, (a, b), _backward)


