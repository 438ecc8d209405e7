"""
Gaussian-process function draws with RBF, Periodic and Noisy Matérn kernels.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import gamma, kv

from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng
from ccnp_lab.exceptions import DatasetError

logger = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4


class KernelKind(str, enum.Enum):
    RBF = "rbf"
    PERIODIC = "periodic"
    NOISY_MATERN = "noisy_matern"


class GPKernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: KernelKind
    lengthscale: float = Field(1.0, gt=0)
    period: float = Field(1.0, gt=0)
    nu: float = Field(2.5, gt=0)
    noise_std: float = Field(0.02, ge=0)

    @property
    def family_id(self) -> str:
        return f"gp-{self.kind.value}"


def _matern(d: np.ndarray, lengthscale: float, nu: float) -> np.ndarray:
    scaled = math.sqrt(2.0 * nu) * d / lengthscale
    out = np.ones_like(d)
    pos = scaled > 0
    s = scaled[pos]
    out[pos] = (s ** nu) * kv(nu, s) / (gamma(nu) * 2.0 ** (nu - 1.0))
    return out


def gp_gram(spec: GPKernelSpec, x: np.ndarray, x2: Optional[np.ndarray] = None) -> np.ndarray:
    """Kernel matrix k(x_i, x_j); for Noisy Matérn the noise variance sits on the diagonal."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise DatasetError("gp_gram: x must be non-empty")
    same = x2 is None
    x2 = x if same else np.asarray(x2, dtype=np.float64).reshape(-1)
    d = np.abs(x[:, None] - x2[None, :])

    if spec.kind is KernelKind.RBF:
        K = np.exp(-(d ** 2) / (2.0 * spec.lengthscale ** 2))
    elif spec.kind is KernelKind.PERIODIC:
        K = np.exp(-2.0 * np.sin(math.pi * d / spec.period) ** 2 / spec.lengthscale ** 2)
    else:
        K = _matern(d, spec.lengthscale, spec.nu)
        if same:
            K = K + spec.noise_std ** 2 * np.eye(len(x))

    if same:
        K = 0.5 * (K + K.T)
    return K


def jittered_cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky of K + jitter*I with jitter escalating x10 from 1e-10 to 1e-4."""
    eye = np.eye(len(K))
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise DatasetError(f"Cholesky failed even with jitter {JITTER_MAX:g}")


def sample_gp_instantiation(spec: GPKernelSpec, x: np.ndarray, rng_seed: SeedLike, draw_id: int = 0) -> Instantiation:
    """y ~ N(0, K + jitter*I); coeffs record the kernel hyperparameters and the draw id."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    K = gp_gram(spec, x)
    L, jitter = jittered_cholesky(K)
    if jitter > JITTER_START:
        logger.debug(f"GP draw needed jitter {jitter:g}")
    rng = make_rng(rng_seed)
    y = L @ rng.standard_normal(len(x))
    coeffs = np.array([spec.lengthscale, spec.period, spec.nu, spec.noise_std, float(draw_id)])
    return Instantiation(x=x, y=y, coeffs=coeffs, family_id=spec.family_id, meta={"jitter": jitter})
