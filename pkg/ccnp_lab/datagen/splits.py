"""
Context/target sampling and train/val/test meta-dataset assembly.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ccnp_lab.datagen.families import FunctionFamilySpec, sample_family_instantiation
from ccnp_lab.datagen.gp import GPKernelSpec, sample_gp_instantiation
from ccnp_lab.datagen.instances import Instantiation, SeedLike, make_rng, spawn_seeds
from ccnp_lab.datagen.lotka_volterra import LVSourceSpec, sample_lv_config, simulate_lv
from ccnp_lab.exceptions import DatasetError

logger = logging.getLogger(__name__)

SourceSpec = Union[FunctionFamilySpec, GPKernelSpec, LVSourceSpec]

DEFAULT_GP_X_RANGE = (-2.0, 2.0)
DEFAULT_SPLIT_RATIO = (9.0, 1.0, 1.0)
MAX_REDRAWS = 1000


class Phase(str, enum.Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True)
class ContextTargetSplit:
    """Sorted index sets into one Instantiation; context is a subset of target."""

    context: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        c, t = np.asarray(self.context), np.asarray(self.target)
        if len(np.unique(c)) != len(c) or len(np.unique(t)) != len(t):
            raise DatasetError("ContextTargetSplit: duplicate indices")
        if not np.isin(c, t).all():
            raise DatasetError("ContextTargetSplit: context must be a subset of target")


def sample_split(
    inst: Instantiation,
    phase: "Phase | str",
    max_context: int,
    max_extra_target: int,
    rng_seed: SeedLike,
    min_context: int = 1,
) -> ContextTargetSplit:
    """
    Train: |I_C| ~ U{min_context..N}, |I_T| = |I_C| + U{1..M}, drawn without replacement.
    Eval: exactly N context points, targets are the whole sequence.

    min_context=2 is what the function-contrastive step needs to cut two views.
    """
    phase = Phase(phase)
    n = len(inst)
    if not 1 <= min_context <= max_context:
        raise DatasetError(f"need 1 <= min_context <= max_context, got {min_context}, {max_context}")
    if max_context + max_extra_target > n:
        raise DatasetError(
            f"max_context + max_extra_target = {max_context + max_extra_target} "
            f"exceeds sequence length {n}"
        )
    rng = make_rng(rng_seed)

    if phase is Phase.EVAL:
        context = np.sort(rng.choice(n, size=max_context, replace=False))
        return ContextTargetSplit(context=context, target=np.arange(n))

    if max_extra_target < 1:
        raise DatasetError(f"max_extra_target must be >= 1 in training, got {max_extra_target}")
    n_context = int(rng.integers(min_context, max_context + 1))
    n_extra = int(rng.integers(1, max_extra_target + 1))
    picked = rng.choice(n, size=n_context + n_extra, replace=False)
    return ContextTargetSplit(context=np.sort(picked[:n_context]), target=np.sort(picked))


@dataclass
class MetaDataset:
    train: list[Instantiation] = field(default_factory=list)
    val: list[Instantiation] = field(default_factory=list)
    test: list[Instantiation] = field(default_factory=list)

    SPLITS = ("train", "val", "test")

    def split(self, name: str) -> list[Instantiation]:
        if name not in self.SPLITS:
            raise DatasetError(f"unknown split {name!r}")
        return getattr(self, name)

    def extend(self, other: "MetaDataset") -> None:
        for name in self.SPLITS:
            self.split(name).extend(other.split(name))

    def sizes(self) -> dict[str, int]:
        return {name: len(self.split(name)) for name in self.SPLITS}


def split_sizes(count: int, split_ratio: Sequence[float]) -> tuple[int, int, int]:
    """Val and test get round(count * share); train takes the remainder."""
    if len(split_ratio) != 3 or min(split_ratio) <= 0:
        raise DatasetError(f"split_ratio must be three positive weights, got {split_ratio}")
    total = float(sum(split_ratio))
    n_val = int(round(count * split_ratio[1] / total))
    n_test = int(round(count * split_ratio[2] / total))
    n_train = count - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise DatasetError(f"count {count} too small for split ratio {tuple(split_ratio)}")
    return n_train, n_val, n_test


def draw_instantiation(
    spec: SourceSpec,
    rng_seed: SeedLike,
    draw_id: int = 0,
    n_points: int = 100,
    x_range: Optional[tuple[float, float]] = None,
) -> Instantiation:
    """One instantiation from any source spec."""
    if isinstance(spec, FunctionFamilySpec):
        if x_range is not None:
            spec = FunctionFamilySpec(**{**spec.model_dump(), "x_range": tuple(x_range)})
        return sample_family_instantiation(spec, n_points, rng_seed)
    if isinstance(spec, GPKernelSpec):
        lo, hi = x_range or DEFAULT_GP_X_RANGE
        return sample_gp_instantiation(spec, np.linspace(lo, hi, n_points), rng_seed, draw_id=draw_id)
    if isinstance(spec, LVSourceSpec):
        config = sample_lv_config(spec.mode, rng_seed, spec.ordering, spec.steps, spec.dt, spec.substeps)
        return simulate_lv(config, rng_seed)
    raise DatasetError(f"unsupported source spec: {type(spec).__name__}")


def make_meta_dataset(
    spec: SourceSpec,
    count: int,
    split_ratio: Sequence[float] = DEFAULT_SPLIT_RATIO,
    rng_seed: SeedLike = 0,
    n_points: int = 100,
    x_range: Optional[tuple[float, float]] = None,
) -> MetaDataset:
    """
    Draw `count` distinct instantiations and deal them into train/val/test.

    Instantiations are distinct by (family_id, coeffs); a duplicate draw is
    replaced by a fresh one so no function appears in two splits.
    """
    n_train, n_val, _ = split_sizes(count, split_ratio)
    root = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    draw_root, shuffle_root = root.spawn(2)

    seen: set[tuple] = set()
    drawn: list[Instantiation] = []
    redraws = 0
    while len(drawn) < count:
        child = draw_root.spawn(1)[0]
        inst = draw_instantiation(spec, child, draw_id=len(drawn), n_points=n_points, x_range=x_range)
        if inst.key in seen:
            redraws += 1
            if redraws > MAX_REDRAWS:
                raise DatasetError(f"{spec.family_id}: could not draw {count} distinct instantiations")
            continue
        seen.add(inst.key)
        drawn.append(inst)

    order = make_rng(shuffle_root).permutation(count)
    shuffled = [drawn[i] for i in order]
    dataset = MetaDataset(
        train=shuffled[:n_train],
        val=shuffled[n_train:n_train + n_val],
        test=shuffled[n_train + n_val:],
    )
    logger.debug(f"{spec.family_id}: drew {count} instantiations {dataset.sizes()}")
    return dataset


def make_shifted_family_set(
    spec: FunctionFamilySpec,
    alpha_range: tuple[float, float],
    count: int,
    rng_seed: SeedLike,
    n_points: int = 100,
) -> list[Instantiation]:
    """Instantiations whose amplitude comes from a range the model never trained on."""
    shifted = FunctionFamilySpec(**{**spec.model_dump(), "alpha_range": tuple(alpha_range)})
    seeds = spawn_seeds(rng_seed, count)
    return [sample_family_instantiation(shifted, n_points, s) for s in seeds]
