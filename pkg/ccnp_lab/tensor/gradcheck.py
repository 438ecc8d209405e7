"""
Central finite-difference checks for every tensor op.

Each case draws random operands, pushes them through the op, contracts the
output with a fixed random weight tensor to get a scalar, and compares the
tape gradient of every operand element against (L(x+h) - L(x-h)) / 2h.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ccnp_lab.tensor import ops
from ccnp_lab.tensor.autograd import Tensor, backward

logger = logging.getLogger(__name__)

STEP = 1e-5
REL_TOL = 1e-4
ABS_FLOOR = 1e-7

CaseFn = Callable[[Sequence[Tensor]], Tensor]


@dataclass
class OpCase:
    fn: CaseFn
    inputs: list[np.ndarray]


@dataclass
class OpReport:
    op: str
    trials: int
    max_rel_error: float
    passed: bool


def _shape(rng: np.random.Generator, ndim: int, low: int = 1, high: int = 5) -> tuple[int, ...]:
    return tuple(int(s) for s in rng.integers(low, high, size=ndim))


def _away_from_zero(rng: np.random.Generator, shape) -> np.ndarray:
    # keeps relu inputs off the kink
    x = rng.uniform(0.1, 1.5, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def _case_matmul(rng):
    n, k, m = _shape(rng, 3)
    if rng.random() < 0.5:
        h = int(rng.integers(2, 4))
        return OpCase(lambda t: ops.matmul(t[0], t[1]), [rng.normal(size=(h, n, k)), rng.normal(size=(k, m))])
    return OpCase(lambda t: ops.matmul(t[0], t[1]), [rng.normal(size=(n, k)), rng.normal(size=(k, m))])


def _case_add(rng):
    shape = _shape(rng, 2)
    other = [shape, shape[1:], ()][int(rng.integers(0, 3))]
    return OpCase(lambda t: ops.add(t[0], t[1]), [rng.normal(size=shape), rng.normal(size=other)])


def _case_sub(rng):
    shape = _shape(rng, 2)
    return OpCase(lambda t: ops.sub(t[0], t[1]), [rng.normal(size=shape), rng.normal(size=shape[1:])])


def _case_mul(rng):
    shape = _shape(rng, 2)
    return OpCase(lambda t: ops.mul(t[0], t[1]), [rng.normal(size=shape), rng.normal(size=shape)])


def _case_concat(rng):
    rows = _shape(rng, 3)
    cols = int(rng.integers(1, 5))
    axis = int(rng.integers(0, 2))
    if axis == 0:
        inputs = [rng.normal(size=(r, cols)) for r in rows]
    else:
        inputs = [rng.normal(size=(cols, r)) for r in rows]
    return OpCase(lambda t: ops.concat(list(t), axis=axis), inputs)


def _case_relu(rng):
    return OpCase(lambda t: ops.relu(t[0]), [_away_from_zero(rng, _shape(rng, 2))])


def _case_softplus(rng):
    return OpCase(lambda t: ops.softplus(t[0]), [rng.normal(scale=2.0, size=_shape(rng, 2))])


def _case_mean(rng):
    shape = _shape(rng, 3)
    axis = [None, 0, 1, 2, (0, 2)][int(rng.integers(0, 5))]
    return OpCase(lambda t: ops.mean(t[0], axis=axis), [rng.normal(size=shape)])


def _case_sum(rng):
    shape = _shape(rng, 2)
    axis = [None, 0, 1][int(rng.integers(0, 3))]
    return OpCase(lambda t: ops.sum(t[0], axis=axis), [rng.normal(size=shape)])


def _case_scale(rng):
    c = float(rng.normal())
    return OpCase(lambda t: ops.scale(t[0], c), [rng.normal(size=_shape(rng, 2))])


def _case_cosine_sim(rng):
    m, n, k = _shape(rng, 3, low=2)
    if rng.random() < 0.3:
        return OpCase(lambda t: ops.cosine_sim(t[0], t[1]), [rng.normal(size=k), rng.normal(size=k)])
    return OpCase(lambda t: ops.cosine_sim(t[0], t[1]), [rng.normal(size=(m, k)), rng.normal(size=(n, k))])


def _case_softmax(rng):
    shape = _shape(rng, 3, low=2)
    axis = int(rng.integers(0, 3))
    return OpCase(lambda t: ops.softmax(t[0], axis=axis), [rng.normal(size=shape)])


def _case_log(rng):
    return OpCase(lambda t: ops.log(t[0]), [rng.uniform(0.5, 2.0, size=_shape(rng, 2))])


def _case_exp(rng):
    return OpCase(lambda t: ops.exp(t[0]), [rng.uniform(-1.0, 1.0, size=_shape(rng, 2))])


def _case_square(rng):
    return OpCase(lambda t: ops.square(t[0]), [rng.normal(size=_shape(rng, 2))])


def _case_gather_rows(rng):
    rows, cols = _shape(rng, 2, low=2)
    idx = rng.integers(0, rows, size=_shape(rng, int(rng.integers(1, 3))))
    return OpCase(lambda t: ops.gather_rows(t[0], idx), [rng.normal(size=(rows, cols))])


def _case_transpose(rng):
    shape = _shape(rng, 3)
    axes = tuple(int(a) for a in rng.permutation(3))
    return OpCase(lambda t: ops.transpose(t[0], axes), [rng.normal(size=shape)])


def _case_reshape(rng):
    a, b, c = _shape(rng, 3)
    return OpCase(lambda t: ops.reshape(t[0], (a * b, c)), [rng.normal(size=(a, b, c))])


OP_CASES: dict[str, Callable[[np.random.Generator], OpCase]] = {
    "matmul": _case_matmul,
    "add": _case_add,
    "sub": _case_sub,
    "mul": _case_mul,
    "concat": _case_concat,
    "relu": _case_relu,
    "softplus": _case_softplus,
    "mean": _case_mean,
    "sum": _case_sum,
    "scale": _case_scale,
    "cosine_sim": _case_cosine_sim,
    "softmax": _case_softmax,
    "log": _case_log,
    "exp": _case_exp,
    "square": _case_square,
    "gather_rows": _case_gather_rows,
    "transpose": _case_transpose,
    "reshape": _case_reshape,
}


def _contract(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.sum(ops.mul(out, Tensor(weights)))


def check_case(case: OpCase, rng: np.random.Generator) -> float:
    """Max relative error over all operand elements for one random case."""
    leaves = [Tensor(x, requires_grad=True) for x in case.inputs]
    out = case.fn(leaves)
    weights = rng.normal(size=out.shape)
    backward(_contract(out, weights))

    def loss_at(arrays: list[np.ndarray]) -> float:
        return float(np.sum(case.fn([Tensor(a) for a in arrays]).data * weights))

    worst = 0.0
    for i, leaf in enumerate(leaves):
        analytic = leaf.grad
        for pos in np.ndindex(*case.inputs[i].shape):
            plus = [a.copy() for a in case.inputs]
            minus = [a.copy() for a in case.inputs]
            plus[i][pos] += STEP
            minus[i][pos] -= STEP
            numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * STEP)
            diff = abs(analytic[pos] - numeric)
            if diff <= ABS_FLOOR:
                continue
            worst = max(worst, diff / max(abs(analytic[pos]), abs(numeric)))
    return worst


def check_op(op: str, trials: int = 10, seed: int = 0) -> OpReport:
    rng = np.random.default_rng([seed, len(op)] + [ord(c) for c in op])
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, check_case(OP_CASES[op](rng), rng))
    return OpReport(op=op, trials=trials, max_rel_error=worst, passed=worst < REL_TOL)


def run_gradcheck(trials: int = 10, seed: int = 0) -> list[OpReport]:
    reports = []
    for op in OP_CASES:
        report = check_op(op, trials=trials, seed=seed)
        logger.info(f"gradcheck {op}: max rel error {report.max_rel_error:.3e} over {trials} trials")
        reports.append(report)
    return reports
