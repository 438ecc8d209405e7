"""
Lotka–Volterra predator/prey trajectories with fixed-step RK4.

    dy1/dx = alpha*y1 - beta*y1*y2
    dy2/dx = delta*y1*y2 - gamma*y2
"""

from __future__ import annotations

import enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng
from ccnp_lab.exceptions import DatasetError

UNDERFLOW = 1e-9


class LVMode(str, enum.Enum):
    GREEK = "greek"
    POPULATION = "population"


class GreekOrdering(str, enum.Enum):
    STANDARD = "standard"    # (alpha, beta) = (4/3, 2/3)
    SWAPPED = "swapped"      # (alpha, beta) = (2/3, 4/3)


GREEK_COEFFS = {
    GreekOrdering.STANDARD: (4.0 / 3.0, 2.0 / 3.0, 1.0, 1.0),
    GreekOrdering.SWAPPED: (2.0 / 3.0, 4.0 / 3.0, 1.0, 1.0),
}
GREEK_POPULATION_RANGE = (0.5, 2.0)

POPULATION_START = (1.6, 0.8)
POPULATION_COEFF_RANGES = {
    "alpha": (0.9, 1.1),
    "beta": (0.05, 0.15),
    "gamma": (1.25, 1.75),
    "delta": (0.5, 1.0),
}


class LVConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: LVMode = LVMode.GREEK
    y1_0: float = Field(gt=0)
    y2_0: float = Field(gt=0)
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    gamma: float = Field(gt=0)
    delta: float = Field(gt=0)
    steps: int = Field(150, ge=2)
    dt: float = Field(0.01, gt=0)
    substeps: int = Field(1, ge=1)

    @property
    def family_id(self) -> str:
        return f"lv-{self.mode.value}"

    @property
    def equilibrium(self) -> tuple[float, float]:
        return self.gamma / self.delta, self.alpha / self.beta


class LVSourceSpec(BaseModel):
    """What a meta-dataset draws LV trajectories from: mode, Greek ordering and grid."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: LVMode = LVMode.GREEK
    ordering: GreekOrdering = GreekOrdering.STANDARD
    steps: int = Field(150, ge=2)
    dt: float = Field(0.01, gt=0)
    substeps: int = Field(1, ge=1)

    @property
    def family_id(self) -> str:
        return f"lv-{self.mode.value}"


def sample_lv_config(
    mode: "LVMode | str",
    rng_seed: SeedLike,
    ordering: "GreekOrdering | str" = GreekOrdering.STANDARD,
    steps: int = 150,
    dt: float = 0.01,
    substeps: int = 1,
) -> LVConfig:
    """Draw the free half of an LV configuration for the given mode."""
    mode = LVMode(mode)
    rng = make_rng(rng_seed)
    if mode is LVMode.GREEK:
        alpha, beta, gamma, delta = GREEK_COEFFS[GreekOrdering(ordering)]
        y1, y2 = rng.uniform(*GREEK_POPULATION_RANGE, size=2)
    else:
        y1, y2 = POPULATION_START
        alpha, beta, gamma, delta = (rng.uniform(*POPULATION_COEFF_RANGES[k]) for k in ("alpha", "beta", "gamma", "delta"))
    return LVConfig(
        mode=mode, y1_0=float(y1), y2_0=float(y2),
        alpha=float(alpha), beta=float(beta), gamma=float(gamma), delta=float(delta),
        steps=steps, dt=dt, substeps=substeps,
    )


def _rhs(y: np.ndarray, c: LVConfig) -> np.ndarray:
    y1, y2 = y
    return np.array([
        c.alpha * y1 - c.beta * y1 * y2,
        c.delta * y1 * y2 - c.gamma * y2,
    ])


def _rk4(y: np.ndarray, c: LVConfig, h: float) -> np.ndarray:
    k1 = _rhs(y, c)
    k2 = _rhs(y + 0.5 * h * k1, c)
    k3 = _rhs(y + 0.5 * h * k2, c)
    k4 = _rhs(y + h * k3, c)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def lv_first_integral(config: LVConfig, y: np.ndarray) -> np.ndarray:
    """V = delta*y1 - gamma*ln y1 + beta*y2 - alpha*ln y2, constant along exact trajectories."""
    y = np.atleast_2d(y)
    y1, y2 = y[:, 0], y[:, 1]
    return config.delta * y1 - config.gamma * np.log(y1) + config.beta * y2 - config.alpha * np.log(y2)


def simulate_lv(config: LVConfig, rng_seed: SeedLike = 0) -> Instantiation:
    """Integrate `steps` recorded points; x is the elapsed time of each point.

    rng_seed is accepted for interface symmetry with the other generators;
    the integration itself is deterministic.
    """
    h = config.dt
    traj = np.empty((config.steps, 2))
    y = np.array([config.y1_0, config.y2_0], dtype=np.float64)
    traj[0] = y
    for k in range(1, config.steps):
        for _ in range(config.substeps):
            y = _rk4(y, config, h)
        if not np.all(np.isfinite(y)) or np.any(y < UNDERFLOW):
            raise DatasetError(
                f"LV population left the valid range at step {k}: y={y.tolist()} (blow-up)"
            )
        traj[k] = y
    x = np.arange(config.steps) * h * config.substeps
    coeffs = np.array([config.alpha, config.beta, config.gamma, config.delta, config.y1_0, config.y2_0])
    return Instantiation(x=x, y=traj, coeffs=coeffs, family_id=config.family_id)
