import json
from pathlib import Path

import pandas as pd
import pytest

from ccnp_lab.datagen.splits import split_sizes
from ccnp_lab.db.base import SessionLocal
from ccnp_lab.db.models import RunLog, RunStatus
from ccnp_lab.evaluation import read_csv
from ccnp_lab.exceptions import ConfigError
from ccnp_lab.runner import (
    SWEEP_COLUMNS,
    TABLE_COLUMNS,
    evaluate_experiment,
    is_monotone_decreasing,
    load_experiment,
    probe_experiment,
    projection_dim_sweep,
    run_experiment,
)
from ccnp_lab.schemas import CoeffProbeConfig, DatasetKind, VariantKind

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


@pytest.fixture
def small(tiny_experiment):
    return tiny_experiment.model_copy(update={"variants": [VariantKind.CNP, VariantKind.CCNP], "seeds": [0]})


# ─── Loading ───────────────────────────────────────────

def test_load_experiment(experiment_file):
    config = load_experiment(experiment_file)
    assert config.variants == [VariantKind.CNP, VariantKind.CCNP]
    assert config.model.y_dim == 1


def test_seed_override_replaces_seed_list(experiment_file):
    assert load_experiment(experiment_file, seed=9).seeds == [9]


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_experiment(tmp_path / "absent.toml")


def test_invalid_field_names_its_path(experiment_file):
    experiment_file.write_text(experiment_file.read_text().replace("batch_size = 4", "batch_size = 0"))
    with pytest.raises(ConfigError, match=r"train\.batch_size"):
        load_experiment(experiment_file)


def test_unknown_key_is_rejected(experiment_file):
    experiment_file.write_text(experiment_file.read_text() + "\n[eval]\nshotz = [5]\n")
    with pytest.raises(ConfigError, match=r"eval\.shotz"):
        load_experiment(experiment_file)


def test_malformed_toml_is_a_config_error(experiment_file):
    experiment_file.write_text("name = ")
    with pytest.raises(ConfigError):
        load_experiment(experiment_file)


@pytest.mark.parametrize("path", sorted(EXPERIMENTS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_experiments_load(path):
    config = load_experiment(path)
    assert config.name == path.stem


@pytest.mark.parametrize("name", ["gp_rbf", "gp_periodic", "gp_matern"])
def test_gp_experiments_use_full_split_sizes(name):
    config = load_experiment(EXPERIMENTS / f"{name}.toml")
    assert config.dataset.kind is DatasetKind.GP
    assert split_sizes(config.dataset.count, config.dataset.split_ratio) == (4096, 256, 256)


def test_lv_experiment_uses_large_contexts():
    config = load_experiment(EXPERIMENTS / "lv_greek.toml")
    assert config.dataset.count == 200
    assert config.train.max_context == 80
    assert config.eval.shots == [80]
    assert config.train.max_context + config.max_extra_target <= config.dataset.sequence_length


# ─── Commands ──────────────────────────────────────────

def test_run_experiment_writes_table_and_summary(small, tmp_path):
    summary = run_experiment(small, out=tmp_path / "out")
    assert summary.ok
    results = tmp_path / "out" / "results" / "tiny"
    table = read_csv(results / "table.csv")
    assert list(table.columns) == TABLE_COLUMNS
    assert table["variant"].tolist() == ["CNP", "CCNP"]
    assert table["n_seeds"].tolist() == [1, 1]
    payload = json.loads((results / "summary.json").read_text())
    assert payload["experiment"] == "tiny"
    assert len(payload["metrics"]) == 2
    assert (tmp_path / "out" / "run" / "tiny" / "CCNP-s0" / "ckpt_best.bin").exists()


def test_summary_metrics_match_table_bit_for_bit(small, tmp_path):
    run_experiment(small, out=tmp_path / "out")
    results = tmp_path / "out" / "results" / "tiny"
    table = read_csv(results / "table.csv")
    metrics = json.loads((results / "summary.json").read_text())["metrics"]
    assert [m["variant"] for m in metrics] == table["variant"].tolist()
    for row, record in zip(table.to_dict(orient="records"), metrics):
        assert set(record) == set(TABLE_COLUMNS)
        for column in TABLE_COLUMNS:
            if pd.isna(row[column]):
                # single seed: no std
                assert record[column] is None
            else:
                assert record[column] == row[column]


def test_run_experiment_logs_every_job(small):
    run_experiment(small)
    db = SessionLocal()
    try:
        rows = db.query(RunLog).filter(RunLog.experiment == "tiny").all()
    finally:
        db.close()
    assert {(r.variant, r.seed) for r in rows} == {("CNP", 0), ("CCNP", 0)}
    assert all(r.status is RunStatus.SUCCESS for r in rows)


def test_eval_without_checkpoints_reports_failures(small):
    summary = evaluate_experiment(small)
    assert not summary.ok
    assert len(summary.failures) == 2
    assert all("CheckpointError" in f.error for f in summary.failures)


def test_eval_reuses_checkpoints_of_run(small, tmp_path):
    run_experiment(small, out=tmp_path)
    summary = evaluate_experiment(small, out=tmp_path)
    assert summary.ok


def test_probe_needs_probe_section(small):
    with pytest.raises(ConfigError):
        probe_experiment(small)


def test_probe_experiment_writes_probe_table(small, tmp_path):
    config = small.model_copy(update={"probe": CoeffProbeConfig(hidden=8, epochs=2, batch_size=4)})
    summary = probe_experiment(config, out=tmp_path)
    assert summary.ok
    probe = read_csv(tmp_path / "results" / "tiny" / "probe.csv")
    assert probe["variant"].tolist() == ["CNP", "CCNP"]
    assert (probe["digest_before"] == probe["digest_after"]).all()


def test_projection_sweep_table(small, tmp_path):
    table, summary = projection_dim_sweep(small, dims=[2, 4], out=tmp_path)
    assert summary.ok
    assert list(table.columns) == SWEEP_COLUMNS
    assert table["dim"].tolist() == [2, 4]
    written = read_csv(tmp_path / "results" / "tiny" / "sweep.csv")
    assert written["dim"].tolist() == [2, 4]
    assert "monotone_decreasing" in json.loads((tmp_path / "results" / "tiny" / "summary.json").read_text())


def test_monotone_check():
    assert is_monotone_decreasing([3.0, 2.0, 2.0, 1.0])
    assert not is_monotone_decreasing([3.0, 1.0, 2.0])
