"""
One training run: (experiment config, variant, seed) -> trained model,
loss curves and checkpoints under run/<experiment>/<variant>-s<seed>/.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ccnp_lab.datagen.instances import make_rng
from ccnp_lab.datagen.splits import MetaDataset
from ccnp_lab.evaluation.metrics import evaluate
from ccnp_lab.evaluation.tables import write_csv
from ccnp_lab.exceptions import DatasetError, TrainingError
from ccnp_lab.model.checkpoint import parameter_digest, restore, save_checkpoint, snapshot
from ccnp_lab.model.variants import CCNPModel, build_variant
from ccnp_lab.schemas import EpochRecord, ExperimentConfig, VariantKind
from ccnp_lab.training.episode import TrainingState, epoch_batches, sample_batch, train_episode

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["epoch", "frl", "tcl", "fcl", "val_ll"]
VAL_SEED = 0


@dataclass
class RunSeeds:
    """Independent streams so every variant consumes randomness the same way."""

    init: np.random.SeedSequence
    shuffle: np.random.SeedSequence
    splits: np.random.SeedSequence
    views: np.random.SeedSequence

    @classmethod
    def derive(cls, train_seed: int, run_seed: int) -> "RunSeeds":
        return cls(*np.random.SeedSequence([train_seed, run_seed]).spawn(4))


@dataclass
class RunArtifacts:
    model: CCNPModel
    curves: list[EpochRecord]
    best_epoch: int
    best_val_ll: float
    final_digest: str
    run_dir: Optional[Path] = None
    paths: dict[str, Path] = field(default_factory=dict)


def run_name(variant: "VariantKind | str", seed: int) -> str:
    return f"{VariantKind(variant).value}-s{seed}"


def _mean(values: list[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def train_run(
    config: ExperimentConfig,
    variant: "VariantKind | str",
    seed: int,
    dataset: MetaDataset,
    run_dir: Optional[Path] = None,
) -> RunArtifacts:
    """Train for config.train.epochs, validating after every epoch; the best-validation weights are returned."""
    variant = VariantKind(variant)
    cfg = config.train
    if not dataset.train or not dataset.val:
        raise DatasetError("train_run: dataset needs non-empty train and val splits")

    seeds = RunSeeds.derive(cfg.seed, seed)
    use_attention = variant.uses_attention and not cfg.disable_attn
    model = build_variant(variant, config.model, seeds.init, use_attention=use_attention)
    state = TrainingState.create(model, cfg)
    shuffle_rng = make_rng(seeds.shuffle)
    val_shots = cfg.val_shots or cfg.max_context

    logger.info(
        f"Training {variant.value} seed={seed}: {model.num_parameters()} parameters, "
        f"tcl={state.tcl_active} fcl={state.fcl_active} schedule={cfg.schedule.value}"
    )

    curves: list[EpochRecord] = []
    best_val, best_epoch, best_state = -math.inf, 0, snapshot(model)
    for epoch in range(1, cfg.epochs + 1):
        reports = []
        for idx in epoch_batches(len(dataset.train), cfg.batch_size, shuffle_rng):
            split_seed, view_seed = seeds.splits.spawn(1)[0], seeds.views.spawn(1)[0]
            if len(idx) < 2 and state.fcl_active:
                continue
            insts = [dataset.train[i] for i in idx]
            batch = sample_batch(insts, state, config.max_extra_target, split_seed, view_seed)
            reports.append(train_episode(state, batch))
        if not reports:
            raise TrainingError(
                f"{variant.value} s{seed} epoch {epoch}: every batch was skipped "
                f"(FCL needs two instantiations per batch, train split has {len(dataset.train)})"
            )

        val = evaluate(model, dataset.val, val_shots, seed=VAL_SEED)
        record = EpochRecord(
            epoch=epoch,
            frl=float(np.mean([r.frl for r in reports])),
            tcl=_mean([r.tcl for r in reports]),
            fcl=_mean([r.fcl for r in reports]),
            val_ll=val.predictive_ll,
        )
        curves.append(record)
        logger.info(
            f"{variant.value} s{seed} epoch {epoch}/{cfg.epochs}: frl={record.frl:.4f} "
            f"tcl={record.tcl} fcl={record.fcl} val_ll={record.val_ll:.4f}"
        )
        if record.val_ll > best_val:
            best_val, best_epoch, best_state = record.val_ll, epoch, snapshot(model)

    final_digest = parameter_digest(model)
    artifacts = RunArtifacts(
        model=model, curves=curves, best_epoch=best_epoch, best_val_ll=best_val,
        final_digest=final_digest, run_dir=run_dir,
    )
    if run_dir is not None:
        artifacts.paths = write_run_dir(run_dir, config, variant, seed, model, curves)
    restore(model, best_state)
    if run_dir is not None:
        artifacts.paths["ckpt_best"] = save_checkpoint(model, Path(run_dir) / "ckpt_best.bin")
    return artifacts


def write_run_dir(
    run_dir: Path,
    config: ExperimentConfig,
    variant: VariantKind,
    seed: int,
    model: CCNPModel,
    curves: list[EpochRecord],
) -> dict[str, Path]:
    """config.json, curves.csv and the final checkpoint."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config_path = run_dir / "config.json"
    config_path.write_text(json.dumps(
        {"variant": variant.value, "seed": seed, "experiment": config.model_dump(mode="json")},
        indent=2, sort_keys=True,
    ))
    curves_path = write_csv([c.model_dump() for c in curves], run_dir / "curves.csv", columns=CURVE_COLUMNS)
    final_path = save_checkpoint(model, run_dir / "ckpt_final.bin")
    return {"config": config_path, "curves": curves_path, "ckpt_final": final_path}
