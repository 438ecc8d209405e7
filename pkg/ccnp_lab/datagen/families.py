"""
Closed-form 1D function families: sinusoids, exponentials, damped oscillators, lines.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng
from ccnp_lab.exceptions import DatasetError


class Family(str, enum.Enum):
    SINUSOID = "sinusoid"
    EXPONENTIAL = "exponential"
    OSCILLATOR = "oscillator"
    LINE = "line"


DEFAULT_X_RANGES: dict[Family, tuple[float, float]] = {
    Family.SINUSOID: (-math.pi, math.pi),
    Family.EXPONENTIAL: (-1.0, 4.0),
    Family.OSCILLATOR: (0.0, 5.0),
    Family.LINE: (0.0, 5.0),
}


class FunctionFamilySpec(BaseModel):
    """Family plus the closed intervals its coefficients and grid are drawn from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Family
    alpha_range: tuple[float, float] = (-1.0, 1.0)
    beta_range: tuple[float, float] = (-0.5, 0.5)
    x_range: tuple[float, float] = (-math.pi, math.pi)

    @field_validator("alpha_range", "beta_range", "x_range")
    @classmethod
    def _non_degenerate(cls, v):
        if not v[0] < v[1]:
            raise ValueError(f"range must satisfy low < high, got {v}")
        return v

    @classmethod
    def default(cls, family: "Family | str") -> "FunctionFamilySpec":
        family = Family(family)
        return cls(family=family, x_range=DEFAULT_X_RANGES[family])

    @property
    def family_id(self) -> str:
        return self.family.value


def evaluate_family(family: "Family | str", alpha: float, beta: float, x: np.ndarray) -> np.ndarray:
    try:
        family = Family(family)
    except ValueError as e:
        raise DatasetError(f"unknown function family: {family!r}") from e
    x = np.asarray(x, dtype=np.float64)
    if family is Family.SINUSOID:
        return alpha * np.sin(x - beta)
    if family is Family.EXPONENTIAL:
        return alpha * np.exp(x - beta)
    if family is Family.OSCILLATOR:
        return alpha * np.sin(x - beta) * np.exp(-0.5 * x)
    return alpha * x + beta


def sample_family_instantiation(spec: FunctionFamilySpec, n_points: int, rng_seed: SeedLike) -> Instantiation:
    """Draw (alpha, beta) uniformly and evaluate the family on an even grid."""
    if n_points < 2:
        raise DatasetError(f"n_points must be >= 2, got {n_points}")
    rng = make_rng(rng_seed)
    alpha = float(rng.uniform(*spec.alpha_range))
    beta = float(rng.uniform(*spec.beta_range))
    x = np.linspace(spec.x_range[0], spec.x_range[1], n_points)
    y = evaluate_family(spec.family, alpha, beta, x)
    return Instantiation(x=x, y=y, coeffs=np.array([alpha, beta]), family_id=spec.family_id)
