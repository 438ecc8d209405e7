"""
Tensor and tape: the reverse-mode core.

Every forward op builds an output Tensor that remembers its parents and a
closure mapping the output gradient to one gradient per parent. `backward`
records the reachable graph into a Tape (topological order) and replays it
in reverse, visiting every node exactly once.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ccnp_lab.exceptions import NonFiniteError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Ops executed inside this block are not recorded."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """n-dimensional float64 value that can take part in a gradient tape."""

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = "leaf"

    # -- construction helpers --

    @classmethod
    def _from_op(
        cls,
        op: str,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
    ) -> "Tensor":
        _check_finite(op, data)
        track = is_grad_enabled() and any(p.requires_grad for p in parents)
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = track
        out.grad = None
        out.name = None
        out._op = op
        out._parents = tuple(parents) if track else ()
        out._backward = backward if track else None
        return out

    # -- introspection --

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item: tensor of shape {self.shape} is not a scalar")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        label = f", name='{self.name}'" if self.name else ""
        return f"Tensor(shape={self.shape}, op='{self._op}', requires_grad={self.requires_grad}{label})"

    # -- operator sugar (implemented in ops) --

    def __add__(self, other):
        from ccnp_lab.tensor import ops
        return ops.add(self, ops.as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        from ccnp_lab.tensor import ops
        return ops.sub(self, ops.as_tensor(other))

    def __rsub__(self, other):
        from ccnp_lab.tensor import ops
        return ops.sub(ops.as_tensor(other), self)

    def __mul__(self, other):
        from ccnp_lab.tensor import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, ops.as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        from ccnp_lab.tensor import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from ccnp_lab.tensor import ops
        return ops.matmul(self, ops.as_tensor(other))


def _check_finite(op: str, data: np.ndarray) -> None:
    if not np.all(np.isfinite(data)):
        bad = int(np.size(data) - np.count_nonzero(np.isfinite(data)))
        raise NonFiniteError(f"{op}: produced {bad} non-finite value(s) in output of shape {data.shape}")


# ─── Tape ───────────────────────────────────────────────


@dataclass(frozen=True)
class TapeNode:
    op: str
    inputs: tuple[int, ...]
    output: int


class Tape:
    """Topologically ordered record of the graph that produced a tensor."""

    def __init__(self, order: list[Tensor]):
        self._order = order

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        # iterative DFS; recursion depth would otherwise grow with graph length
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self._order)

    @property
    def nodes(self) -> list[TapeNode]:
        return [
            TapeNode(t._op, tuple(id(p) for p in t._parents), id(t))
            for t in self._order
        ]

    def run_backward(self, seed: np.ndarray) -> None:
        root = self._order[-1]
        grads: dict[int, np.ndarray] = {id(root): seed}
        for node in reversed(self._order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def backward(loss: Tensor) -> None:
    """Populate `.grad` of every requires_grad leaf reachable from a scalar loss.

    Grads accumulate across calls until zeroed.
    """
    if loss.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ShapeError("backward: loss is not connected to any tensor that requires grad (empty tape)")
    tape = Tape.record(loss)
    tape.run_backward(np.ones_like(loss.data))
