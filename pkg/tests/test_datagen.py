import math

import numpy as np
import pytest

from ccnp_lab.datagen.families import Family, FunctionFamilySpec, evaluate_family, sample_family_instantiation
from ccnp_lab.datagen.gp import GPKernelSpec, KernelKind, gp_gram, jittered_cholesky, sample_gp_instantiation
from ccnp_lab.datagen.instances import Instantiation
from ccnp_lab.datagen.lotka_volterra import (
    GreekOrdering,
    LVConfig,
    LVMode,
    lv_first_integral,
    sample_lv_config,
    simulate_lv,
)
from ccnp_lab.datagen.splits import (
    ContextTargetSplit,
    Phase,
    make_meta_dataset,
    make_shifted_family_set,
    sample_split,
    split_sizes,
)
from ccnp_lab.exceptions import DatasetError


# ─── Function families ─────────────────────────────────

def test_sinusoid_closed_form():
    y = evaluate_family(Family.SINUSOID, 1.0, 0.0, np.array([math.pi / 2]))
    np.testing.assert_allclose(y, [1.0])


@pytest.mark.parametrize("family,expected", [
    (Family.EXPONENTIAL, 2.0 * math.exp(1.0 - 0.5)),
    (Family.OSCILLATOR, 2.0 * math.sin(1.0 - 0.5) * math.exp(-0.5)),
    (Family.LINE, 2.0 * 1.0 + 0.5),
])
def test_family_closed_forms(family, expected):
    np.testing.assert_allclose(evaluate_family(family, 2.0, 0.5, np.array([1.0])), [expected])


def test_unknown_family_is_a_dataset_error():
    with pytest.raises(DatasetError):
        evaluate_family("square-wave", 1.0, 0.0, np.zeros(3))


def test_family_default_ranges():
    assert FunctionFamilySpec.default(Family.EXPONENTIAL).x_range == (-1.0, 4.0)
    assert FunctionFamilySpec.default(Family.LINE).x_range == (0.0, 5.0)
    spec = FunctionFamilySpec.default(Family.SINUSOID)
    assert spec.alpha_range == (-1.0, 1.0)
    assert spec.beta_range == (-0.5, 0.5)


def test_degenerate_range_rejected():
    with pytest.raises(ValueError):
        FunctionFamilySpec(family=Family.SINUSOID, alpha_range=(1.0, 1.0))


def test_family_draw_is_deterministic_and_within_ranges(sine_spec):
    a = sample_family_instantiation(sine_spec, 100, 11)
    b = sample_family_instantiation(sine_spec, 100, 11)
    np.testing.assert_array_equal(a.y, b.y)
    alpha, beta = a.coeffs
    assert -1.0 <= alpha <= 1.0 and -0.5 <= beta <= 0.5
    assert a.x[0] == pytest.approx(-math.pi) and a.x[-1] == pytest.approx(math.pi)
    assert a.y.shape == (100, 1)


def test_instantiation_requires_increasing_x():
    with pytest.raises(DatasetError):
        Instantiation(x=[0.0, 0.0, 1.0], y=[1.0, 2.0, 3.0], coeffs=[], family_id="x")


# ─── Gaussian processes ────────────────────────────────

@pytest.mark.parametrize("kind", list(KernelKind))
def test_gram_symmetric_and_psd_after_jitter(kind):
    rng = np.random.default_rng(0)
    spec = GPKernelSpec(kind=kind, lengthscale=0.7, period=1.3, nu=1.5)
    for _ in range(50):
        x = np.sort(rng.uniform(-2, 2, size=20))
        K = gp_gram(spec, x)
        np.testing.assert_array_equal(K, K.T)
        L, jitter = jittered_cholesky(K)
        assert np.linalg.eigvalsh(K + jitter * np.eye(20)).min() >= -1e-8
        np.testing.assert_allclose(L @ L.T, K + jitter * np.eye(20), atol=1e-10)


def test_matern_half_is_exponential():
    spec = GPKernelSpec(kind=KernelKind.NOISY_MATERN, lengthscale=0.8, nu=0.5, noise_std=0.0)
    x = np.linspace(-2, 2, 20)
    d = np.abs(x[:, None] - x[None, :])
    np.testing.assert_allclose(gp_gram(spec, x, x + 0.0), np.exp(-d / 0.8), atol=1e-12)


def test_matern_at_one_lengthscale():
    spec = GPKernelSpec(kind=KernelKind.NOISY_MATERN, lengthscale=1.0, nu=0.5, noise_std=0.0)
    k = gp_gram(spec, np.array([0.0]), np.array([1.0]))
    assert k[0, 0] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_noisy_matern_adds_noise_on_diagonal():
    spec = GPKernelSpec(kind=KernelKind.NOISY_MATERN, lengthscale=1.0, nu=2.5, noise_std=0.1)
    K = gp_gram(spec, np.linspace(0, 1, 5))
    np.testing.assert_allclose(np.diag(K), np.full(5, 1.0 + 0.01))


def test_gp_draws_are_deterministic_and_distinct():
    spec = GPKernelSpec(kind=KernelKind.RBF, lengthscale=0.5)
    x = np.linspace(-2, 2, 50)
    a = sample_gp_instantiation(spec, x, 1, draw_id=0)
    b = sample_gp_instantiation(spec, x, 1, draw_id=0)
    c = sample_gp_instantiation(spec, x, 2, draw_id=1)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.allclose(a.y, c.y)
    assert a.key != c.key


def test_empty_grid_rejected():
    with pytest.raises(DatasetError):
        gp_gram(GPKernelSpec(kind=KernelKind.RBF), np.array([]))


# ─── Lotka-Volterra ────────────────────────────────────

def test_greek_mode_conserves_first_integral():
    config = LVConfig(mode=LVMode.GREEK, y1_0=1.2, y2_0=0.7, alpha=4 / 3, beta=2 / 3, gamma=1.0, delta=1.0)
    inst = simulate_lv(config)
    V = lv_first_integral(config, inst.y)
    assert np.max(np.abs(V - V[0])) < 1e-6
    assert inst.y.shape == (150, 2)
    np.testing.assert_allclose(inst.x[:3], [0.0, 0.01, 0.02])


def test_equilibrium_is_a_fixed_point():
    config = LVConfig(y1_0=1.0, y2_0=2.0, alpha=4 / 3, beta=2 / 3, gamma=1.0, delta=1.0)
    assert config.equilibrium == pytest.approx((1.0, 2.0))
    inst = simulate_lv(config)
    np.testing.assert_allclose(inst.y, np.tile([1.0, 2.0], (150, 1)), atol=1e-9)


def test_swapped_ordering_exchanges_alpha_beta():
    standard = sample_lv_config(LVMode.GREEK, 0, GreekOrdering.STANDARD)
    swapped = sample_lv_config(LVMode.GREEK, 0, GreekOrdering.SWAPPED)
    assert (standard.alpha, standard.beta) == pytest.approx((4 / 3, 2 / 3))
    assert (swapped.alpha, swapped.beta) == pytest.approx((2 / 3, 4 / 3))
    assert (standard.y1_0, standard.y2_0) == (swapped.y1_0, swapped.y2_0)


def test_population_mode_draws_coefficients():
    config = sample_lv_config(LVMode.POPULATION, 5)
    assert (config.y1_0, config.y2_0) == (1.6, 0.8)
    assert 0.9 <= config.alpha <= 1.1
    assert 0.05 <= config.beta <= 0.15
    assert 1.25 <= config.gamma <= 1.75
    assert 0.5 <= config.delta <= 1.0
    inst = simulate_lv(config)
    assert inst.family_id == "lv-population"
    assert np.all(inst.y > 0)


def test_population_blow_up_is_a_dataset_error():
    config = LVConfig(y1_0=2.0, y2_0=0.5, alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, steps=50, dt=1e6)
    with pytest.raises(DatasetError):
        simulate_lv(config)


def test_substeps_stretch_the_time_axis():
    config = LVConfig(y1_0=1.0, y2_0=1.5, alpha=4 / 3, beta=2 / 3, gamma=1.0, delta=1.0, steps=10, substeps=4)
    inst = simulate_lv(config)
    assert inst.x[1] == pytest.approx(0.04)


# ─── Context/target splits ─────────────────────────────

def test_train_split_sizes_and_subset(sine_spec):
    inst = sample_family_instantiation(sine_spec, 100, 0)
    for seed in range(50):
        s = sample_split(inst, Phase.TRAIN, max_context=5, max_extra_target=10, rng_seed=seed)
        assert 1 <= len(s.context) <= 5
        assert 1 <= len(s.target) - len(s.context) <= 10
        assert set(s.context) <= set(s.target)


def test_min_context_is_respected(sine_spec):
    inst = sample_family_instantiation(sine_spec, 100, 0)
    sizes = {len(sample_split(inst, Phase.TRAIN, 5, 10, s, min_context=2).context) for s in range(100)}
    assert min(sizes) == 2


def test_eval_split_uses_exact_context_and_whole_sequence(sine_spec):
    inst = sample_family_instantiation(sine_spec, 100, 0)
    s = sample_split(inst, Phase.EVAL, 5, 0, rng_seed=3)
    assert len(s.context) == 5
    np.testing.assert_array_equal(s.target, np.arange(100))


def test_split_larger_than_sequence_is_rejected(sine_spec):
    inst = sample_family_instantiation(sine_spec, 10, 0)
    with pytest.raises(DatasetError):
        sample_split(inst, Phase.TRAIN, 6, 5, 0)


def test_context_must_be_subset_of_target():
    with pytest.raises(DatasetError):
        ContextTargetSplit(context=np.array([1, 5]), target=np.array([1, 2, 3]))


def test_split_sizes_for_500_at_9_1_1():
    assert split_sizes(500, (9, 1, 1)) == (410, 45, 45)


def test_meta_dataset_has_no_overlap_between_splits(sine_spec):
    dataset = make_meta_dataset(sine_spec, count=60, rng_seed=9, n_points=20)
    keys = {name: {inst.key for inst in dataset.split(name)} for name in dataset.SPLITS}
    assert not keys["train"] & keys["val"]
    assert not keys["train"] & keys["test"]
    assert not keys["val"] & keys["test"]
    assert sum(dataset.sizes().values()) == 60


def test_meta_dataset_is_deterministic(sine_spec):
    a = make_meta_dataset(sine_spec, count=22, rng_seed=4, n_points=20)
    b = make_meta_dataset(sine_spec, count=22, rng_seed=4, n_points=20)
    for name in a.SPLITS:
        assert [i.key for i in a.split(name)] == [i.key for i in b.split(name)]


def test_shifted_family_set_uses_new_amplitudes(sine_spec):
    insts = make_shifted_family_set(sine_spec, (1.0, 2.0), count=20, rng_seed=0, n_points=30)
    assert len(insts) == 20
    assert all(1.0 <= inst.coeffs[0] <= 2.0 for inst in insts)
