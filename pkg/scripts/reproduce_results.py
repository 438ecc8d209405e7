"""
Desk-scale reproduction: runs the sinusoid comparison, the ablation, the
coefficient probe and the Lotka-Volterra validation check, then prints a
PASS/WARN/FAIL line per check.

Usage:
    python scripts/reproduce_results.py [--jobs 4] [--only sine,ablation,probe,lv]
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ccnp_lab.config import get_settings  # noqa: E402
from ccnp_lab.evaluation import read_csv  # noqa: E402
from ccnp_lab.exceptions import CCNPLabError  # noqa: E402
from ccnp_lab.logging_config import setup_logging  # noqa: E402
from ccnp_lab.runner import OutputDirs, load_experiment, run_experiment  # noqa: E402
from ccnp_lab.training.run import run_name  # noqa: E402

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"

# Reported 5-shot sinusoid MSE for CCNP, raw scale
REFERENCE_CCNP_MSE = 0.479e-2
REFERENCE_SLACK = 3.0

CHECKS = ("sine", "ablation", "probe", "lv")


def _line(status: str, name: str, detail: str) -> str:
    marker = {"PASS": "✅", "WARN": "⚠️", "FAIL": "❌"}[status]
    return f"  {marker} {status:<4} {name}: {detail}"


def _table(config, out):
    return read_csv(OutputDirs.resolve(config.name, out).results / "table.csv").set_index("variant")


def check_sine(jobs: int, out) -> str:
    config = load_experiment(EXPERIMENTS / "sine_5shot.toml")
    run_experiment(config, jobs=jobs, out=out)
    table = _table(config, out)
    ccnp, cnp = table.loc["CCNP", "mse_mean"], table.loc["CNP", "mse_mean"]
    detail = f"CCNP mse={ccnp:.5f} CNP mse={cnp:.5f} bound={REFERENCE_SLACK * REFERENCE_CCNP_MSE:.5f}"
    ok = ccnp < cnp and ccnp <= REFERENCE_SLACK * REFERENCE_CCNP_MSE
    return _line("PASS" if ok else "FAIL", "sinusoid 5-shot", detail)


def check_ablation(jobs: int, out) -> str:
    config = load_experiment(EXPERIMENTS / "ablation_sine.toml")
    run_experiment(config, jobs=jobs, out=out)
    table = _table(config, out)
    full, no_tcl = table.loc["CCNP"], table.loc["CCNP-TCL"]
    pooled = float(np.sqrt((full["mse_std"] ** 2 + no_tcl["mse_std"] ** 2) / 2))
    detail = f"CCNP mse={full['mse_mean']:.5f} CCNP-TCL mse={no_tcl['mse_mean']:.5f} pooled std={pooled:.5f}"
    if full["mse_mean"] <= no_tcl["mse_mean"]:
        return _line("PASS", "ablation (-TCL)", detail)
    if full["mse_mean"] - no_tcl["mse_mean"] <= pooled:
        return _line("WARN", "ablation (-TCL)", detail)
    return _line("FAIL", "ablation (-TCL)", detail)


def check_probe(jobs: int, out) -> str:
    config = load_experiment(EXPERIMENTS / "probe_sine.toml")
    run_experiment(config, jobs=jobs, out=out)
    probe = read_csv(OutputDirs.resolve(config.name, out).results / "probe.csv")
    means = probe.groupby("variant")["combined_mse"].mean()
    detail = " ".join(f"{v}={means[v]:.5f}" for v in means.index)
    return _line("PASS" if means["CCNP"] < means["CNP"] else "FAIL", "coefficient probe", detail)


def check_lv(jobs: int, out) -> str:
    config = load_experiment(EXPERIMENTS / "lv_greek.toml")
    run_experiment(config, jobs=jobs, out=out)
    runs = OutputDirs.resolve(config.name, out).runs
    final = {}
    for variant in config.variants:
        lls = [read_csv(runs / run_name(variant, s) / "curves.csv")["val_ll"].iloc[-1] for s in config.seeds]
        final[variant.value] = float(np.mean(lls))
    detail = f"CCNP val_ll={final['CCNP']:.4f} CNP val_ll={final['CNP']:.4f}"
    return _line("PASS" if final["CCNP"] > final["CNP"] else "FAIL", "LV Greek validation LL", detail)


RUNNERS = {"sine": check_sine, "ablation": check_ablation, "probe": check_probe, "lv": check_lv}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--jobs", type=int, default=get_settings().DEFAULT_JOBS)
    parser.add_argument("--only", type=str, default=",".join(CHECKS))
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    settings = get_settings()
    setup_logging(settings.LOG_LEVEL, json_format=settings.LOG_JSON)
    selected = [c.strip() for c in args.only.split(",") if c.strip()]

    print("=" * 60)
    print("🧪 ccnp-lab: desk-scale reproduction")
    print("=" * 60)
    print(f"   Checks: {', '.join(selected)}   Workers: {args.jobs}")
    print()

    lines = []
    for name in selected:
        if name not in RUNNERS:
            lines.append(_line("FAIL", name, "unknown check"))
            continue
        print(f"-> {name} ...")
        try:
            lines.append(RUNNERS[name](args.jobs, args.out))
        except (CCNPLabError, KeyError) as e:
            lines.append(_line("FAIL", name, f"{type(e).__name__}: {e}"))
        print(lines[-1])

    print("\n" + "=" * 60)
    print("📊 Results:")
    for line in lines:
        print(line)
    sys.exit(1 if any(" FAIL " in line for line in lines) else 0)


if __name__ == "__main__":
    main()
