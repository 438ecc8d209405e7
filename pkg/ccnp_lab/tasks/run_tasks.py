"""
Job execution: trains or loads one (variant, seed) model, evaluates it,
optionally probes it, and logs every result to run_logs.

execute_job runs in worker processes and never raises; the parent calls
record_result so that only one process writes to the ledger.
"""

from __future__ import annotations

import enum
import logging
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ccnp_lab.datagen.families import FunctionFamilySpec
from ccnp_lab.datagen.splits import MetaDataset
from ccnp_lab.db.base import SessionLocal, create_tables
from ccnp_lab.db.models import RunLog, RunStatus
from ccnp_lab.evaluation.metrics import EvalResult, amplitude_shift, evaluate_shots
from ccnp_lab.evaluation.probe import coefficient_inference
from ccnp_lab.exceptions import CCNPLabError, CheckpointError
from ccnp_lab.logging_config import job_context
from ccnp_lab.model.checkpoint import load_checkpoint
from ccnp_lab.model.variants import CCNPModel
from ccnp_lab.schemas import DatasetKind, ExperimentConfig, ProbeReport, VariantKind
from ccnp_lab.training.run import train_run

logger = logging.getLogger(__name__)


class JobKind(str, enum.Enum):
    TRAIN = "train"
    EVAL = "eval"
    PROBE = "probe"
    SWEEP = "sweep"


@dataclass
class Job:
    kind: JobKind
    config: ExperimentConfig
    variant: VariantKind
    seed: int
    dataset: MetaDataset
    run_dir: Path
    probe: bool = False
    label: str = ""


@dataclass
class JobResult:
    kind: JobKind
    variant: VariantKind
    seed: int
    status: RunStatus
    run_id: str
    label: str = ""
    evals: dict[int, EvalResult] = field(default_factory=dict)
    shift: Optional[EvalResult] = None
    probe: Optional[ProbeReport] = None
    details: Optional[str] = None
    error_message: Optional[str] = None
    traceback: Optional[str] = None
    duration_ms: int = 0

    @property
    def ok(self) -> bool:
        return self.status is RunStatus.SUCCESS


def _obtain_model(job: Job) -> CCNPModel:
    """Train for TRAIN/SWEEP jobs; EVAL loads the best checkpoint; PROBE reuses one when present."""
    ckpt = job.run_dir / "ckpt_best.bin"
    if job.kind is JobKind.EVAL:
        if not ckpt.exists():
            raise CheckpointError(f"no checkpoint at {ckpt}; run training first")
        return load_checkpoint(ckpt)
    if job.kind is JobKind.PROBE:
        if job.config.probe and job.config.probe.checkpoint:
            return load_checkpoint(job.config.probe.checkpoint)
        if ckpt.exists():
            return load_checkpoint(ckpt)
    return train_run(job.config, job.variant, job.seed, job.dataset, run_dir=job.run_dir).model


def _shift(job: Job, model: CCNPModel) -> Optional[EvalResult]:
    cfg = job.config
    if cfg.eval.shifted_alpha_range is None or cfg.dataset.kind is not DatasetKind.FAMILY:
        return None
    spec = next(s for s in cfg.dataset.sources() if isinstance(s, FunctionFamilySpec))
    return amplitude_shift(
        model, spec, cfg.eval.shifted_alpha_range, cfg.eval.shifted_count,
        cfg.eval.shots[0], seed=cfg.eval.seed, n_points=cfg.dataset.n_points,
    )


def execute_job(job: Job) -> JobResult:
    """
    Run a single job:
    1. Train (or load) the model
    2. Evaluate every configured shot count on the eval split
    3. Optionally run the amplitude-shift set and the coefficient probe
    Failures are captured in the result instead of propagating.
    """
    with job_context(job.config.name, job.variant.value, job.seed) as ctx:
        return _execute(job, ctx.run_id)


def _execute(job: Job, run_id: str) -> JobResult:
    start_time = time.time()
    result = JobResult(kind=job.kind, variant=job.variant, seed=job.seed,
                       status=RunStatus.SUCCESS, run_id=run_id, label=job.label)
    try:
        logger.info(f"Starting {job.kind.value} job {job.variant.value} seed={job.seed} {job.label}".rstrip())
        model = _obtain_model(job)

        if job.kind is not JobKind.PROBE:
            cfg = job.config
            result.evals = evaluate_shots(model, job.dataset.split(cfg.eval.split), cfg.eval.shots, seed=cfg.eval.seed)
            result.shift = _shift(job, model)
        if job.probe or job.kind is JobKind.PROBE:
            result.probe = coefficient_inference(model, job.config.probe, job.dataset, seed=job.seed)

        result.details = "; ".join(
            f"{n}-shot ll={r.predictive_ll:.5g} mse={r.recon_mse:.5g}" for n, r in result.evals.items()
        ) or None
        result.duration_ms = int((time.time() - start_time) * 1000)
        logger.info(f"Job {job.variant.value} s{job.seed} completed in {result.duration_ms}ms")
        return result

    except CCNPLabError as e:
        # expected failures: bad data, bad checkpoint, diverged training
        result.status = RunStatus.FAILURE
        result.error_message = f"{type(e).__name__}: {e}"
        result.duration_ms = int((time.time() - start_time) * 1000)
        logger.warning(f"Job {job.variant.value} s{job.seed} failed: {result.error_message}")
        return result

    except Exception as e:
        result.status = RunStatus.FAILURE
        result.error_message = f"{type(e).__name__}: {e}"
        result.traceback = traceback.format_exc()
        result.duration_ms = int((time.time() - start_time) * 1000)
        logger.error(f"Job {job.variant.value} s{job.seed} crashed: {result.error_message}")
        return result


def record_result(experiment: str, result: JobResult, db_url: str = "") -> None:
    """Write one run_logs row; a ledger failure is logged, never raised."""
    try:
        create_tables(db_url)
        db = SessionLocal(db_url)
    except Exception as e:
        logger.error(f"Could not open run ledger: {e}")
        return
    try:
        db.add(RunLog(
            run_id=result.run_id,
            experiment=experiment,
            job_kind=result.kind.value,
            variant=result.variant.value,
            seed=result.seed,
            status=result.status,
            details=(f"{result.label} {result.details or ''}".strip() or None),
            error_message=result.error_message,
            traceback=result.traceback,
            duration_ms=result.duration_ms,
        ))
        db.commit()
    except Exception as log_err:
        logger.error(f"Could not log job result: {log_err}")
        db.rollback()
    finally:
        db.close()
