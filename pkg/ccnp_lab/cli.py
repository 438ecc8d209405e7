"""
ccnp-lab command line: run, datagen, eval, probe, sweep-proj, gradcheck.

Exit codes: 0 success, 1 run failure, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from ccnp_lab import __version__
from ccnp_lab.config import get_settings
from ccnp_lab.datagen.cache import load_or_generate
from ccnp_lab.datagen.families import Family
from ccnp_lab.datagen.gp import KernelKind
from ccnp_lab.datagen.lotka_volterra import LVMode
from ccnp_lab.exceptions import CCNPLabError, ConfigError
from ccnp_lab.logging_config import setup_logging
from ccnp_lab.runner import (
    evaluate_experiment,
    load_experiment,
    probe_experiment,
    projection_dim_sweep,
    run_experiment,
)
from ccnp_lab.schemas import DatasetConfig, DatasetKind, RunSummary
from ccnp_lab.tensor.gradcheck import REL_TOL, run_gradcheck

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors surface as ConfigError (exit code 2)."""

    def error(self, message):
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("config_file", nargs="?", type=Path, help="experiment TOML file")
    p.add_argument("--config", type=Path, dest="config_flag", help="experiment TOML file")
    p.add_argument("--seed", type=int, help="run a single seed instead of the file's seed list")
    p.add_argument("--out", type=Path, help="output root (results/ and run/ are created below it)")
    p.add_argument("--jobs", type=int, default=None, help="parallel worker processes")
    p.set_defaults(config_required=config_required)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccnp-lab", description="Contrastive conditional neural process lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _common(sub.add_parser("run", help="generate data, train every variant x seed, evaluate"))
    _common(sub.add_parser("eval", help="evaluate the best checkpoints of an earlier run"))
    _common(sub.add_parser("probe", help="coefficient-inference probe on frozen representations"))

    sweep = sub.add_parser("sweep-proj", help="projection-head width ablation")
    _common(sweep)
    sweep.add_argument("--dims", type=str, help="comma-separated projection widths, e.g. 8,16,32")

    datagen = sub.add_parser("datagen", help="generate and cache a meta-dataset")
    _common(datagen, config_required=False)
    datagen.add_argument("--family", choices=[f.value for f in Family])
    datagen.add_argument("--kernel", choices=[k.value for k in KernelKind])
    datagen.add_argument("--lv-mode", choices=[m.value for m in LVMode])
    datagen.add_argument("--count", type=int, default=500)
    datagen.add_argument("--name", type=str, help="cache name (derived from the flags when omitted)")

    grad = sub.add_parser("gradcheck", help="finite-difference check of every tensor op")
    grad.add_argument("--trials", type=int, default=10)
    grad.add_argument("--seed", type=int, default=0)
    return parser


def _config_path(args) -> Optional[Path]:
    path = args.config_flag or args.config_file
    if path is None and args.config_required:
        raise ConfigError(f"{args.command}: an experiment file is required (--config <path>)")
    return path


def _jobs(args) -> int:
    jobs = args.jobs if args.jobs is not None else get_settings().DEFAULT_JOBS
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    return jobs


def _report(summary: RunSummary) -> int:
    print(json.dumps(summary.outputs, indent=2, sort_keys=True))
    for failure in summary.failures:
        print(f"FAILED {failure.kind} {failure.variant} seed={failure.seed}: {failure.error}", file=sys.stderr)
    return EXIT_OK if summary.ok else EXIT_FAILURE


def _datagen_config(args) -> DatasetConfig:
    path = _config_path(args)
    if path is not None:
        config = load_experiment(path).dataset
        if args.seed is not None:
            config = DatasetConfig.model_validate({**config.model_dump(), "seed": args.seed})
        return config

    chosen = [flag for flag in (args.family, args.kernel, args.lv_mode) if flag]
    if len(chosen) > 1:
        raise ConfigError("datagen: pick one of --family, --kernel, --lv-mode")
    seed = args.seed if args.seed is not None else 0
    if args.kernel:
        raw = {"kind": DatasetKind.GP, "kernel": args.kernel}
        tag = f"gp-{args.kernel}"
    elif args.lv_mode:
        raw = {"kind": DatasetKind.LV, "lv_mode": args.lv_mode}
        tag = f"lv-{args.lv_mode}"
    else:
        family = args.family or Family.SINUSOID.value
        raw = {"kind": DatasetKind.FAMILY, "families": [family]}
        tag = family
    raw.update(name=args.name or f"{tag}-n{args.count}-s{seed}", count=args.count, seed=seed)
    try:
        return DatasetConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"datagen: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}")


def cmd_datagen(args) -> int:
    config = _datagen_config(args)
    root = args.out if args.out is not None else None
    dataset = load_or_generate(config, root=root)
    print(json.dumps({"name": config.name, "sizes": dataset.sizes()}, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    reports = run_gradcheck(trials=args.trials, seed=args.seed)
    for r in reports:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.op:<12} max_rel_error={r.max_rel_error:.3e} trials={r.trials} {status}")
    failed = [r.op for r in reports if not r.passed]
    if failed:
        print(f"ops above {REL_TOL:g}: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_experiment(_config_path(args), seed=args.seed)
    return _report(run_experiment(config, jobs=_jobs(args), out=args.out))


def cmd_eval(args) -> int:
    config = load_experiment(_config_path(args), seed=args.seed)
    return _report(evaluate_experiment(config, jobs=_jobs(args), out=args.out))


def cmd_probe(args) -> int:
    config = load_experiment(_config_path(args), seed=args.seed)
    return _report(probe_experiment(config, jobs=_jobs(args), out=args.out))


def cmd_sweep(args) -> int:
    config = load_experiment(_config_path(args), seed=args.seed)
    dims = None
    if args.dims:
        try:
            dims = [int(d) for d in args.dims.split(",") if d.strip()]
        except ValueError:
            raise ConfigError(f"--dims must be comma-separated integers, got {args.dims!r}")
    _, summary = projection_dim_sweep(config, dims=dims, jobs=_jobs(args), out=args.out)
    return _report(summary)


COMMANDS = {
    "run": cmd_run,
    "eval": cmd_eval,
    "probe": cmd_probe,
    "sweep-proj": cmd_sweep,
    "datagen": cmd_datagen,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    setup_logging(settings.LOG_LEVEL, json_format=settings.LOG_JSON)
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CCNPLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
