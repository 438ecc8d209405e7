import math

import numpy as np
import pytest

from ccnp_lab.evaluation import (
    EvalResult,
    amplitude_shift,
    evaluate,
    evaluate_shots,
    merge_reports,
    predictive_log_likelihood,
    read_csv,
    reconstruction_mse,
    write_csv,
)
from ccnp_lab.exceptions import DatasetError, ShapeError
from ccnp_lab.model import build_variant
from ccnp_lab.schemas import VariantKind


@pytest.fixture
def model(tiny_dims):
    return build_variant(VariantKind.CCNP, tiny_dims, seed=0)


# ─── Metrics ───────────────────────────────────────────

def test_mse_of_zero_predictor_on_sine():
    x = np.linspace(-math.pi, math.pi, 100)
    assert reconstruction_mse(np.zeros(100), np.sin(x)) == pytest.approx(0.495, abs=0.01)


def test_mse_of_perfect_predictor_is_zero():
    y = np.sin(np.linspace(0, 1, 30))
    assert reconstruction_mse(y, y) == 0.0


def test_mse_shape_mismatch():
    with pytest.raises(ShapeError):
        reconstruction_mse(np.zeros(3), np.zeros(4))


def test_log_likelihood_of_standard_normal_at_mean():
    ll = predictive_log_likelihood(np.zeros((4, 1)), np.ones((4, 1)), np.zeros((4, 1)))
    assert ll == pytest.approx(-0.5 * math.log(2 * math.pi))


# ─── Reports ───────────────────────────────────────────

def result(ll, mse):
    return EvalResult(shots=5, predictive_ll=ll, recon_mse=mse, n_instantiations=10)


def test_single_seed_has_no_std():
    report = merge_reports("CCNP", 5, {0: result(-1.0, 0.2)}, mse_scale=100.0)
    assert report.ll_std is None and report.mse_std is None
    assert math.isnan(report.table_row()["mse_std"])


def test_report_statistics_and_display_scale():
    report = merge_reports("CNP", 5, {1: result(-2.0, 0.3), 0: result(-1.0, 0.1)}, mse_scale=100.0)
    assert report.seeds == [0, 1]
    assert report.ll_mean == pytest.approx(-1.5)
    assert report.mse_std == pytest.approx(np.std([0.1, 0.3], ddof=1))
    row = report.table_row()
    assert row["mse_display"] == pytest.approx(0.2 * 100.0)
    assert row["ll_display"] == pytest.approx(-1.5 * 1e-2)
    assert row["n_seeds"] == 2


def test_csv_floats_survive_round_trip(tmp_path):
    rows = [{"variant": "CCNP", "value": 0.1 + 0.2}, {"variant": "CNP", "value": 1 / 3}]
    path = write_csv(rows, tmp_path / "out" / "t.csv", columns=["variant", "value"])
    assert b"\r\n" in path.read_bytes()
    df = read_csv(path)
    assert df["value"].tolist() == [0.1 + 0.2, 1 / 3]


# ─── Evaluation ────────────────────────────────────────

def test_evaluate_is_deterministic(model, sine_dataset):
    a = evaluate(model, sine_dataset.test, 5, seed=2)
    b = evaluate(model, sine_dataset.test, 5, seed=2)
    assert a == b
    assert a.n_instantiations == len(sine_dataset.test)
    assert math.isfinite(a.predictive_ll) and a.recon_mse >= 0


def test_evaluate_shots_keys(model, sine_dataset):
    results = evaluate_shots(model, sine_dataset.val, [1, 5, 10])
    assert sorted(results) == [1, 5, 10]
    assert all(r.shots == n for n, r in results.items())


def test_evaluate_needs_instantiations(model):
    with pytest.raises(DatasetError):
        evaluate(model, [], 5)


def test_amplitude_shift_runs_on_fresh_instantiations(model, sine_spec):
    shifted = amplitude_shift(model, sine_spec, (1.0, 2.0), count=6, shots=5, seed=0, n_points=30)
    assert shifted.n_instantiations == 6
    assert shifted.recon_mse > 0
