import numpy as np
import pytest

from ccnp_lab.exceptions import TrainingError
from ccnp_lab.tensor import AdamState, Tensor, adam_step, backward, clip_grad_norm, ops


def param(values):
    return Tensor(np.asarray(values, dtype=np.float64), requires_grad=True)


def test_first_adam_step_moves_by_lr_against_gradient():
    p = param([1.0, -2.0])
    p.grad = np.array([0.5, -3.0])
    adam_step({"p": p}, AdamState(lr=0.1))
    # bias-corrected first step is lr * sign(g)
    np.testing.assert_allclose(p.data, [0.9, -1.9], atol=1e-6)


def test_zero_learning_rate_leaves_parameters_unchanged():
    p = param([0.3, 0.7])
    before = p.data.copy()
    p.grad = np.array([1.0, 1.0])
    adam_step({"p": p}, AdamState(lr=0.0))
    np.testing.assert_array_equal(p.data, before)


def test_missing_gradient_is_an_error():
    with pytest.raises(TrainingError):
        adam_step({"p": param([1.0])}, AdamState())


def test_adam_minimises_a_quadratic():
    p = param([4.0, -3.0])
    state = AdamState(lr=0.1)
    for _ in range(500):
        p.zero_grad()
        backward(ops.sum(ops.square(p)))
        adam_step({"p": p}, state)
    np.testing.assert_allclose(p.data, [0.0, 0.0], atol=5e-2)
    assert state.step == 500


def test_zero_grad_flag_clears_after_step():
    p = param([1.0])
    p.grad = np.array([2.0])
    adam_step({"p": p}, AdamState(), zero_grad=True)
    np.testing.assert_array_equal(p.grad, [0.0])


def test_clip_grad_norm_scales_to_max_norm():
    a, b = param([0.0, 0.0]), param([0.0])
    a.grad, b.grad = np.array([3.0, 0.0]), np.array([4.0])
    total = clip_grad_norm({"a": a, "b": b}, max_norm=1.0)
    assert total == pytest.approx(5.0)
    clipped = np.sqrt(np.sum(a.grad ** 2) + np.sum(b.grad ** 2))
    assert clipped == pytest.approx(1.0, rel=1e-9)


def test_clip_grad_norm_leaves_small_gradients():
    a = param([0.0])
    a.grad = np.array([0.5])
    clip_grad_norm({"a": a}, max_norm=10.0)
    np.testing.assert_array_equal(a.grad, [0.5])
