"""
Shared fixtures: tiny model dims, tiny datasets, and settings pointed at tmp_path.
"""

import numpy as np
import pytest

from ccnp_lab.config import get_settings
from ccnp_lab.datagen.families import Family, FunctionFamilySpec
from ccnp_lab.datagen.splits import make_meta_dataset
from ccnp_lab.db.base import get_engine
from ccnp_lab.schemas import DatasetConfig, ExperimentConfig, ModelDims, TrainConfig


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Every test writes its data, results, runs and ledger under its own tmp dir."""
    monkeypatch.setenv("CCNP_LAB_DATA", str(tmp_path / "data"))
    monkeypatch.setenv("RESULTS_DIR", str(tmp_path / "results"))
    monkeypatch.setenv("RUNS_DIR", str(tmp_path / "run"))
    monkeypatch.setenv("DATABASE_URL", f"sqlite:///{tmp_path / 'ledger.db'}")
    monkeypatch.setenv("LOG_JSON", "false")
    get_settings.cache_clear()
    get_engine.cache_clear()
    yield get_settings()
    get_settings.cache_clear()
    get_engine.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_dims():
    return ModelDims(hidden=8, encoder_layers=2, decoder_layers=2, heads=2, z_dim=4)


@pytest.fixture
def sine_spec():
    return FunctionFamilySpec.default(Family.SINUSOID)


@pytest.fixture
def sine_dataset(sine_spec):
    return make_meta_dataset(sine_spec, count=24, split_ratio=(4, 1, 1), rng_seed=3, n_points=30)


@pytest.fixture
def tiny_experiment(tiny_dims):
    """Small enough that a full run of three variants takes a few seconds."""
    return ExperimentConfig(
        name="tiny",
        dataset=DatasetConfig(name="tiny-sine", count=24, split_ratio=(4, 1, 1), n_points=30, seed=3),
        model=tiny_dims,
        train=TrainConfig(epochs=2, batch_size=4, max_context=5, max_extra_target=5),
        seeds=[0, 1],
    )


TINY_TOML = """
name = "tiny"
variants = ["CNP", "CCNP"]
seeds = [0]

[dataset]
name = "tiny-sine"
count = 24
split_ratio = [4, 1, 1]
n_points = 30
seed = 3

[model]
hidden = 8
encoder_layers = 2
decoder_layers = 2
heads = 2
z_dim = 4

[train]
epochs = 1
batch_size = 4
max_context = 5
max_extra_target = 5
"""


@pytest.fixture
def experiment_file(tmp_path):
    """The tiny experiment as a TOML file, two variants and one seed."""
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML)
    return path
