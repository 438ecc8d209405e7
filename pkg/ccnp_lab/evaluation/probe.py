"""
Coefficient inference: regress a sinusoid's (alpha, beta) from frozen representations.

The backbone only ever runs under no_grad, so its parameters never reach
a tape; that is checked after training (no grads populated, digest unchanged).
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ccnp_lab.datagen.families import Family
from ccnp_lab.datagen.instances import Instantiation, make_rng, spawn_seeds
from ccnp_lab.datagen.splits import MetaDataset, Phase, sample_split
from ccnp_lab.exceptions import DatasetError, TrainingError
from ccnp_lab.model.batch import SegmentLayout, pair_features
from ccnp_lab.model.checkpoint import parameter_digest
from ccnp_lab.model.variants import CCNPModel
from ccnp_lab.schemas import CoeffProbeConfig, ProbeReport
from ccnp_lab.tensor import MLP, AdamState, Tensor, adam_step, backward, ops

logger = logging.getLogger(__name__)


def probe_inputs(
    model: CCNPModel, insts: Sequence[Instantiation], shots: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """(features, labels): frozen representation of an N-shot context and (alpha, beta)."""
    seeds = spawn_seeds(seed, len(insts))
    contexts = [sample_split(inst, Phase.EVAL, shots, 0, s).context for inst, s in zip(insts, seeds)]
    layout = SegmentLayout([pair_features(inst, c) for inst, c in zip(insts, contexts)])
    features = model.probe_representation(layout)
    labels = np.stack([inst.coeffs[:2] for inst in insts])
    return features, labels


def _mse_loss(pred: Tensor, labels: Tensor) -> Tensor:
    return ops.mean(ops.square(ops.sub(pred, labels)))


def coefficient_inference(
    model: CCNPModel,
    config: CoeffProbeConfig,
    dataset: MetaDataset,
    seed: int = 0,
) -> ProbeReport:
    train = dataset.split(config.train_split)
    test = dataset.split(config.test_split)
    if not train or not test:
        raise DatasetError("coefficient_inference: probe train/test splits must be non-empty")
    families = {inst.family_id for inst in train + test}
    if families != {Family.SINUSOID.value}:
        logger.warning(f"Coefficient probe expects sinusoid data, got families {sorted(families)}; running anyway")

    backbone = model.parameters()
    for p in backbone.values():
        p.grad = None
    digest_before = parameter_digest(model)

    x_train, y_train = probe_inputs(model, train, config.shots, config.seed + seed)
    x_test, y_test = probe_inputs(model, test, config.shots, config.seed + seed + 1)

    rng = make_rng([config.seed, seed])
    regressor = MLP([x_train.shape[1], config.hidden, y_train.shape[1]], rng)
    params = regressor.parameters()
    adam = AdamState(lr=config.lr)
    for _ in range(config.epochs):
        order = rng.permutation(len(x_train))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            regressor.zero_grad()
            loss = _mse_loss(regressor(Tensor(x_train[idx])), Tensor(y_train[idx]))
            backward(loss)
            adam_step(params, adam)

    touched = [name for name, p in backbone.items() if p.grad is not None]
    if touched:
        raise TrainingError(f"probe training populated backbone gradients: {touched[:3]}")
    digest_after = parameter_digest(model)
    if digest_after != digest_before:
        raise TrainingError("probe training changed backbone parameters")

    pred = regressor(Tensor(x_test)).data
    sq = (pred - y_test) ** 2
    report = ProbeReport(
        variant=model.kind.value,
        seed=seed,
        alpha_mse=float(sq[:, 0].mean()),
        beta_mse=float(sq[:, 1].mean()),
        combined_mse=float(sq.mean()),
        digest_before=digest_before,
        digest_after=digest_after,
    )
    logger.info(
        f"Probe {report.variant} s{seed}: alpha_mse={report.alpha_mse:.4f} "
        f"beta_mse={report.beta_mse:.4f}"
    )
    return report
