"""
Parameter containers: Module, Linear, MLP.
"""

from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np

from ccnp_lab.tensor import ops
from ccnp_lab.tensor.autograd import Tensor


class Module:
    """Walks its attributes (in assignment order) to find parameters."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()

    def num_parameters(self) -> int:
        return int(sum(p.size for _, p in self.named_parameters()))


class Linear(Module):
    """y = x W + b with W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""

    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator, bias: bool = True):
        bound = 1.0 / math.sqrt(fan_in)
        self.weight = Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True)
        self.bias = Tensor(rng.uniform(-bound, bound, size=(fan_out,)), requires_grad=True) if bias else None
        self.fan_in = fan_in
        self.fan_out = fan_out

    def __call__(self, x: Tensor) -> Tensor:
        out = ops.matmul(x, self.weight)
        return out if self.bias is None else ops.add(out, self.bias)


class MLP(Module):
    """Stack of Linear layers with ReLU between them (none after the last)."""

    def __init__(
        self,
        widths: list[int],
        rng: np.random.Generator,
        final_activation: Optional[str] = None,
    ):
        self.layers = [Linear(a, b, rng) for a, b in zip(widths[:-1], widths[1:])]
        self.final_activation = final_activation

    def __call__(self, x: Tensor) -> Tensor:
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < last or self.final_activation == "relu":
                x = ops.relu(x)
        return x

    @property
    def out_features(self) -> int:
        return self.layers[-1].fan_out
