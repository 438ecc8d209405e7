"""
Instantiation (one sampled function) and the seed helpers every generator shares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ccnp_lab.exceptions import DatasetError

SeedLike = Union[int, np.random.SeedSequence]


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, count: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


@dataclass
class Instantiation:
    """x: (n,) time indices; y: (n, d) observations; coeffs: generating parameters."""

    x: np.ndarray
    y: np.ndarray
    coeffs: np.ndarray
    family_id: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64)
        self.y = y.reshape(-1, 1) if y.ndim == 1 else y
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if len(self.x) != len(self.y):
            raise DatasetError(f"Instantiation: len(x)={len(self.x)} != len(y)={len(self.y)}")
        if len(self.x) > 1 and not np.all(np.diff(self.x) > 0):
            raise DatasetError("Instantiation: x must be strictly increasing")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def y_dim(self) -> int:
        return self.y.shape[1]

    @property
    def key(self) -> tuple:
        """Identity used to keep train/val/test free of function overlap."""
        return (self.family_id, tuple(float(c) for c in self.coeffs))
