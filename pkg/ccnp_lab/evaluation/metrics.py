"""
N-shot evaluation: exactly N context points, predictions over the whole sequence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ccnp_lab.datagen.instances import Instantiation, spawn_seeds
from ccnp_lab.datagen.families import FunctionFamilySpec
from ccnp_lab.datagen.splits import Phase, make_shifted_family_set, sample_split
from ccnp_lab.exceptions import DatasetError, ShapeError
from ccnp_lab.model.batch import EpisodeBatch
from ccnp_lab.model.decoder import GaussianPrediction
from ccnp_lab.model.variants import CCNPModel
from ccnp_lab.objectives import gaussian_nll
from ccnp_lab.schemas import MetricReport
from ccnp_lab.tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

EVAL_CHUNK = 64


@dataclass(frozen=True)
class EvalResult:
    shots: int
    predictive_ll: float
    recon_mse: float
    n_instantiations: int


def reconstruction_mse(mu: np.ndarray, y: np.ndarray) -> float:
    mu, y = np.asarray(mu, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if mu.shape != y.shape:
        raise ShapeError(f"reconstruction_mse: {mu.shape} vs {y.shape}")
    return float(np.mean((mu - y) ** 2))


def predictive_log_likelihood(mu: np.ndarray, sigma: np.ndarray, y: np.ndarray) -> float:
    """Mean over points of log N(y; mu, diag sigma^2), summed over output dims."""
    with no_grad():
        nll = gaussian_nll(GaussianPrediction(mu=Tensor(mu), sigma=Tensor(sigma)), Tensor(y))
    return float(-np.mean(nll.data))


def evaluate(model: CCNPModel, insts: Sequence[Instantiation], shots: int, seed: int = 0) -> EvalResult:
    """
    Per instantiation: mean LL and MSE over its whole sequence; the result
    averages those over instantiations. Context draws depend only on seed.
    """
    if not insts:
        raise DatasetError("evaluate: no instantiations to evaluate")
    seeds = spawn_seeds(seed, len(insts))
    splits = [sample_split(inst, Phase.EVAL, shots, 0, s) for inst, s in zip(insts, seeds)]

    lls, mses = [], []
    for start in range(0, len(insts), EVAL_CHUNK):
        chunk = slice(start, start + EVAL_CHUNK)
        batch = EpisodeBatch.build(insts[chunk], splits[chunk])
        with no_grad():
            pred = model.predict(batch)
            nll = gaussian_nll(pred, Tensor(batch.target_y)).data
        sq = np.sum((pred.mu.data - batch.target_y) ** 2, axis=1) / batch.target_y.shape[1]
        counts = np.bincount(batch.target_segment, minlength=batch.batch_size)
        lls.extend(-np.bincount(batch.target_segment, weights=nll, minlength=batch.batch_size) / counts)
        mses.extend(np.bincount(batch.target_segment, weights=sq, minlength=batch.batch_size) / counts)

    return EvalResult(
        shots=shots,
        predictive_ll=float(np.mean(lls)),
        recon_mse=float(np.mean(mses)),
        n_instantiations=len(insts),
    )


def evaluate_shots(
    model: CCNPModel, insts: Sequence[Instantiation], shots: Sequence[int], seed: int = 0
) -> dict[int, EvalResult]:
    return {n: evaluate(model, insts, n, seed=seed) for n in shots}


def merge_reports(
    variant: str,
    shots: int,
    results: dict[int, EvalResult],
    mse_scale: float,
    ll_scale: float = 1e-2,
) -> MetricReport:
    """Fold per-seed results ({seed: EvalResult}) into one MetricReport."""
    seeds = sorted(results)
    return MetricReport(
        variant=variant,
        shots=shots,
        seeds=seeds,
        predictive_ll=[results[s].predictive_ll for s in seeds],
        recon_mse=[results[s].recon_mse for s in seeds],
        ll_scale=ll_scale,
        mse_scale=mse_scale,
    )


def amplitude_shift(
    model: CCNPModel,
    spec: FunctionFamilySpec,
    alpha_range: tuple[float, float],
    count: int,
    shots: int,
    seed: int = 0,
    n_points: int = 100,
) -> EvalResult:
    """N-shot metrics on instantiations whose amplitude lies outside the training range."""
    insts = make_shifted_family_set(spec, alpha_range, count, seed, n_points=n_points)
    result = evaluate(model, insts, shots, seed=seed)
    logger.debug(f"amplitude shift {alpha_range}: mse={result.recon_mse:.5f}")
    return result
