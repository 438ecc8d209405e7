"""
Experiment orchestration: load a TOML experiment, fan (variant x seed)
jobs out to a process pool, then fold the results into table.csv,
summary.json and the optional shift/probe/sweep tables.
"""

from __future__ import annotations

import json
import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ccnp_lab.config import get_settings
from ccnp_lab.datagen.cache import load_or_generate
from ccnp_lab.datagen.splits import MetaDataset
from ccnp_lab.evaluation.metrics import EvalResult, merge_reports
from ccnp_lab.evaluation.tables import write_csv
from ccnp_lab.exceptions import ConfigError
from ccnp_lab.logging_config import setup_logging
from ccnp_lab.schemas import ExperimentConfig, JobFailure, RunSummary, VariantKind
from ccnp_lab.tasks.run_tasks import Job, JobKind, JobResult, execute_job, record_result
from ccnp_lab.training.run import run_name

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "variant", "shots", "ll_mean", "ll_std", "mse_mean", "mse_std",
    "ll_scale", "mse_scale", "ll_display", "mse_display", "n_seeds",
]
SHIFT_COLUMNS = ["variant", "mse_mean", "mse_std"]
PROBE_COLUMNS = ["variant", "seed", "alpha_mse", "beta_mse", "combined_mse", "digest_before", "digest_after"]
SWEEP_COLUMNS = ["dim", "mse_mean", "mse_std"]


@dataclass
class OutputDirs:
    results: Path
    runs: Path

    @classmethod
    def resolve(cls, experiment: str, out: Optional[Path] = None) -> "OutputDirs":
        """--out replaces both roots; otherwise RESULTS_DIR and RUNS_DIR apply."""
        settings = get_settings()
        if out is not None:
            out = Path(out)
            return cls(results=out / "results" / experiment, runs=out / "run" / experiment)
        return cls(results=settings.results_root / experiment, runs=settings.runs_root / experiment)


# ─── Config loading ────────────────────────────────────

def _format_validation_error(err: ValidationError) -> str:
    parts = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{loc}: {item['msg']}")
    return "; ".join(parts)


def load_experiment(path: "str | Path", seed: Optional[int] = None) -> ExperimentConfig:
    """Parse and validate an experiment file; `seed` replaces the seed list with a single seed."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file")
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}")
    if seed is not None:
        raw["seeds"] = [seed]
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{path}: {_format_validation_error(e)}")


# ─── Job dispatch ──────────────────────────────────────

def run_jobs(jobs: list[Job], n_workers: int = 1) -> list[JobResult]:
    """Results come back in submission order whatever the completion order."""
    if n_workers <= 1 or len(jobs) <= 1:
        return [execute_job(job) for job in jobs]
    settings = get_settings()
    with ProcessPoolExecutor(
        max_workers=min(n_workers, len(jobs)),
        initializer=setup_logging,
        initargs=(settings.LOG_LEVEL, settings.LOG_JSON),
    ) as pool:
        futures = [pool.submit(execute_job, job) for job in jobs]
        return [f.result() for f in futures]


def _record_all(experiment: str, results: Iterable[JobResult]) -> list[JobFailure]:
    failures = []
    for result in results:
        record_result(experiment, result)
        if not result.ok:
            failures.append(JobFailure(
                kind=result.kind.value, variant=result.variant.value,
                seed=result.seed, error=result.error_message or "unknown error",
            ))
    return failures


def _variant_jobs(
    config: ExperimentConfig, dataset: MetaDataset, runs: Path, kind: JobKind, probe: bool = False
) -> list[Job]:
    return [
        Job(kind=kind, config=config, variant=variant, seed=seed, dataset=dataset,
            run_dir=runs / run_name(variant, seed), probe=probe)
        for variant in config.variants
        for seed in config.seeds
    ]


# ─── Artifacts ─────────────────────────────────────────

def metric_table(config: ExperimentConfig, results: list[JobResult]) -> pd.DataFrame:
    """One row per (variant, shots); seeds that failed are left out of the statistics."""
    rows = []
    for variant in config.variants:
        for shots in config.eval.shots:
            per_seed: dict[int, EvalResult] = {
                r.seed: r.evals[shots] for r in results
                if r.ok and r.variant is variant and shots in r.evals
            }
            if not per_seed:
                continue
            report = merge_reports(variant.value, shots, per_seed, mse_scale=config.dataset.mse_scale)
            rows.append(report.table_row())
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def shift_table(config: ExperimentConfig, results: list[JobResult]) -> pd.DataFrame:
    rows = []
    for variant in config.variants:
        values = [r.shift.recon_mse for r in results if r.ok and r.variant is variant and r.shift is not None]
        if not values:
            continue
        rows.append({
            "variant": variant.value,
            "mse_mean": float(np.mean(values)),
            "mse_std": float(np.std(values, ddof=1)) if len(values) >= 2 else np.nan,
        })
    return pd.DataFrame(rows, columns=SHIFT_COLUMNS)


def probe_table(results: list[JobResult]) -> pd.DataFrame:
    rows = [r.probe.model_dump() for r in results if r.ok and r.probe is not None]
    return pd.DataFrame(rows, columns=PROBE_COLUMNS)


def write_summary(summary: RunSummary, path: Path, extra: Optional[dict] = None) -> Path:
    payload = summary.model_dump(mode="json")
    if extra:
        payload.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def _summary(config: ExperimentConfig, n_jobs: int, failures: list[JobFailure]) -> RunSummary:
    return RunSummary(
        experiment=config.name,
        dataset=config.dataset.name,
        variants=[v.value for v in config.variants],
        seeds=list(config.seeds),
        jobs=n_jobs,
        failures=failures,
    )


def _table_records(table: pd.DataFrame) -> list[dict]:
    """Native Python rows for json.dumps: floats keep every bit, NaN becomes null."""
    rows = table.astype(object).where(table.notna(), None).to_dict(orient="records")
    return [{k: v.item() if isinstance(v, np.generic) else v for k, v in row.items()} for row in rows]


# ─── Commands ──────────────────────────────────────────

def run_experiment(
    config: ExperimentConfig, jobs: int = 1, out: Optional[Path] = None
) -> RunSummary:
    """
    Generate (or load) the dataset, train and evaluate every
    (variant x seed), and write results/<experiment>/table.csv plus
    summary.json. Failed jobs are listed in the summary.
    """
    dirs = OutputDirs.resolve(config.name, out)
    dataset = load_or_generate(config.dataset)
    job_list = _variant_jobs(config, dataset, dirs.runs, JobKind.TRAIN, probe=config.probe is not None)
    logger.info(f"Running {config.name}: {len(job_list)} jobs on {max(jobs, 1)} worker(s)")

    results = run_jobs(job_list, jobs)
    failures = _record_all(config.name, results)
    summary = _summary(config, len(job_list), failures)

    table = metric_table(config, results)
    summary.outputs["table"] = str(write_csv(table, dirs.results / "table.csv"))
    if config.eval.shifted_alpha_range is not None:
        summary.outputs["shift"] = str(write_csv(shift_table(config, results), dirs.results / "shift.csv"))
    if config.probe is not None:
        summary.outputs["probe"] = str(write_csv(probe_table(results), dirs.results / "probe.csv"))
    summary.outputs["summary"] = str(dirs.results / "summary.json")
    write_summary(summary, dirs.results / "summary.json", {"metrics": _table_records(table)})

    if failures:
        logger.warning(f"{config.name}: {len(failures)} of {len(job_list)} jobs failed")
    else:
        logger.info(f"{config.name}: all {len(job_list)} jobs succeeded")
    return summary


def evaluate_experiment(
    config: ExperimentConfig, jobs: int = 1, out: Optional[Path] = None
) -> RunSummary:
    """Re-evaluate the best checkpoints of an earlier `run` without training."""
    dirs = OutputDirs.resolve(config.name, out)
    dataset = load_or_generate(config.dataset)
    job_list = _variant_jobs(config, dataset, dirs.runs, JobKind.EVAL)
    results = run_jobs(job_list, jobs)
    failures = _record_all(config.name, results)
    summary = _summary(config, len(job_list), failures)
    table = metric_table(config, results)
    summary.outputs["table"] = str(write_csv(table, dirs.results / "table.csv"))
    if config.eval.shifted_alpha_range is not None:
        summary.outputs["shift"] = str(write_csv(shift_table(config, results), dirs.results / "shift.csv"))
    write_summary(summary, dirs.results / "summary.json", {"metrics": _table_records(table)})
    return summary


def probe_experiment(
    config: ExperimentConfig, jobs: int = 1, out: Optional[Path] = None
) -> RunSummary:
    """Coefficient probe per (variant x seed); trains first when no checkpoint exists."""
    if config.probe is None:
        raise ConfigError(f"{config.name}: probe: section [probe] is required for the probe command")
    dirs = OutputDirs.resolve(config.name, out)
    dataset = load_or_generate(config.dataset)
    job_list = _variant_jobs(config, dataset, dirs.runs, JobKind.PROBE)
    results = run_jobs(job_list, jobs)
    failures = _record_all(config.name, results)
    summary = _summary(config, len(job_list), failures)
    summary.outputs["probe"] = str(write_csv(probe_table(results), dirs.results / "probe.csv"))
    write_summary(summary, dirs.results / "summary.json")
    return summary


def is_monotone_decreasing(values: list[float]) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))


def projection_dim_sweep(
    config: ExperimentConfig,
    dims: Optional[list[int]] = None,
    jobs: int = 1,
    out: Optional[Path] = None,
) -> tuple[pd.DataFrame, RunSummary]:
    """Train one variant per projection width and tabulate reconstruction MSE per width."""
    sweep = config.sweep
    dims = list(dims or (sweep.dims if sweep else [8, 16, 32, 64, 128]))
    if not dims:
        raise ConfigError("sweep.dims: must not be empty")
    variant = sweep.variant if sweep else VariantKind.CCNP
    shots = config.eval.shots[0]

    dirs = OutputDirs.resolve(config.name, out)
    dataset = load_or_generate(config.dataset)
    job_list = []
    for dim in dims:
        cfg = config.model_copy(update={
            "model": config.model.model_copy(update={"z_dim": dim}),
            "eval": config.eval.model_copy(update={"shots": [shots]}),
        })
        for seed in config.seeds:
            job_list.append(Job(
                kind=JobKind.SWEEP, config=cfg, variant=variant, seed=seed, dataset=dataset,
                run_dir=dirs.runs / f"z{dim}" / run_name(variant, seed), label=f"z_dim={dim}",
            ))

    results = run_jobs(job_list, jobs)
    failures = _record_all(config.name, results)

    rows = []
    for dim in dims:
        values = [
            r.evals[shots].recon_mse for r in results
            if r.ok and r.label == f"z_dim={dim}" and shots in r.evals
        ]
        if not values:
            continue
        rows.append({
            "dim": dim,
            "mse_mean": float(np.mean(values)),
            "mse_std": float(np.std(values, ddof=1)) if len(values) >= 2 else np.nan,
        })
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)

    trend = is_monotone_decreasing(table["mse_mean"].tolist())
    logger.info(f"projection sweep over {dims}: MSE monotone decreasing with width = {trend}")

    summary = _summary(config, len(job_list), failures)
    summary.variants = [variant.value]
    summary.outputs["sweep"] = str(write_csv(table, dirs.results / "sweep.csv"))
    write_summary(summary, dirs.results / "summary.json", {"monotone_decreasing": trend})
    return table, summary
