"""
One optimisation episode (a batch of instantiations).

Sequential schedule: FCL step, then TCL step, then FRL step, each
backpropagating into its own parameter group only and each with its own
Adam state. Combined schedule: one step on L_FRL + a*L_TCL + b*L_FCL.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ccnp_lab.datagen.instances import Instantiation, SeedLike, spawn_seeds
from ccnp_lab.datagen.splits import Phase, sample_split
from ccnp_lab.exceptions import NonFiniteError, TrainingError
from ccnp_lab.model.batch import EpisodeBatch
from ccnp_lab.model.decoder import RepresentationBundle
from ccnp_lab.model.encoder import Branch
from ccnp_lab.model.variants import CCNPModel
from ccnp_lab.objectives import BatchEmbeddings, combined_objective, fcl_loss, frl_nll, tcl_loss
from ccnp_lab.schemas import EpisodeReport, Schedule, TrainConfig
from ccnp_lab.tensor import AdamState, Tensor, adam_step, backward, clip_grad_norm, no_grad
from ccnp_lab.training.groups import ParameterGroups

logger = logging.getLogger(__name__)


@dataclass
class TrainingState:
    model: CCNPModel
    config: TrainConfig
    groups: ParameterGroups
    tcl_active: bool
    fcl_active: bool
    adam: dict[str, AdamState] = field(default_factory=dict)

    @classmethod
    def create(cls, model: CCNPModel, config: TrainConfig) -> "TrainingState":
        combined = config.schedule is Schedule.COMBINED
        tcl_active = model.kind.uses_tcl and not config.disable_tcl and not (combined and config.weights.alpha == 0)
        fcl_active = model.kind.uses_fcl and not config.disable_fcl and not (combined and config.weights.beta == 0)
        model.restrict_branches(tcl=tcl_active, fcl=fcl_active)
        return cls(
            model=model,
            config=config,
            groups=ParameterGroups.for_model(model, tcl_active=tcl_active, fcl_active=fcl_active),
            tcl_active=tcl_active,
            fcl_active=fcl_active,
            adam={
                "fcl": AdamState(lr=config.lr_fcl),
                "tcl": AdamState(lr=config.lr_tcl),
                "frl": AdamState(lr=config.lr_frl),
                "combined": AdamState(lr=config.lr_frl),
            },
        )

    @property
    def min_context(self) -> int:
        return 2 if self.fcl_active else 1


def sample_batch(
    insts: Sequence[Instantiation],
    state: TrainingState,
    max_extra_target: int,
    split_seed: SeedLike,
    view_seed: SeedLike,
) -> EpisodeBatch:
    cfg = state.config
    seeds = spawn_seeds(split_seed, len(insts))
    splits = [
        sample_split(inst, Phase.TRAIN, cfg.max_context, max_extra_target, s, min_context=state.min_context)
        for inst, s in zip(insts, seeds)
    ]
    return EpisodeBatch.build(insts, splits, view_seed=view_seed if state.fcl_active else None)


def _evaluate_loss(name: str, fn: Callable[[], Tensor]) -> Tensor:
    try:
        loss = fn()
    except NonFiniteError as e:
        raise TrainingError(f"{name} loss became non-finite: {e}") from e
    value = loss.item()
    if not math.isfinite(value):
        raise TrainingError(f"{name} loss is {value}")
    return loss


def _step(state: TrainingState, group: str, loss: Tensor) -> None:
    params = state.groups.group(group)
    if not params:
        return
    backward(loss)
    if state.config.grad_clip is not None:
        clip_grad_norm(params, state.config.grad_clip)
    adam_step(params, state.adam[group])


def _fcl(state: TrainingState, batch: EpisodeBatch) -> Tensor:
    q_i, q_j = state.model.fcl_embeddings(batch)
    return fcl_loss(BatchEmbeddings(q_i=q_i, q_j=q_j), state.config.weights.tau)


def _tcl(state: TrainingState, batch: EpisodeBatch, r_T: Optional[Tensor] = None) -> Tensor:
    z_hat, z = state.model.tcl_embeddings(batch, r_T)
    return tcl_loss(BatchEmbeddings(z_hat=z_hat, z=z, segment=batch.target_segment), state.config.weights.tau)


def _frl_sequential(state: TrainingState, batch: EpisodeBatch) -> Tensor:
    """r_T and r_F always enter the decoder as constants; zeros when the branch is not live."""
    model = state.model
    r_C = model.branch(Branch.C, batch.context)
    with no_grad():
        r_T = model.branch(Branch.T, batch.context)
        r_F = model.branch(Branch.F, batch.context)
    prediction = model.predict(batch, RepresentationBundle(r_C=r_C, r_T=r_T, r_F=r_F))
    return frl_nll(prediction, batch.target_y)


def train_episode(state: TrainingState, batch: EpisodeBatch) -> EpisodeReport:
    """Run one episode and report the loss of each objective before its own step."""
    model = state.model

    if state.config.schedule is Schedule.COMBINED:
        model.zero_grad()
        bundle = model.represent(batch.context)
        frl = _evaluate_loss("FRL", lambda: frl_nll(model.predict(batch, bundle), batch.target_y))
        tcl = _evaluate_loss("TCL", lambda: _tcl(state, batch, bundle.r_T)) if state.tcl_active else None
        fcl = _evaluate_loss("FCL", lambda: _fcl(state, batch)) if state.fcl_active else None
        total = _evaluate_loss("combined", lambda: combined_objective(frl, tcl, fcl, state.config.weights))
        _step(state, "combined", total)
        return EpisodeReport(
            frl=frl.item(),
            tcl=None if tcl is None else tcl.item(),
            fcl=None if fcl is None else fcl.item(),
        )

    report: dict[str, Optional[float]] = {"tcl": None, "fcl": None}
    if state.fcl_active:
        model.zero_grad()
        loss = _evaluate_loss("FCL", lambda: _fcl(state, batch))
        report["fcl"] = loss.item()
        _step(state, "fcl", loss)
    if state.tcl_active:
        model.zero_grad()
        loss = _evaluate_loss("TCL", lambda: _tcl(state, batch))
        report["tcl"] = loss.item()
        _step(state, "tcl", loss)
    model.zero_grad()
    loss = _evaluate_loss("FRL", lambda: _frl_sequential(state, batch))
    _step(state, "frl", loss)
    return EpisodeReport(frl=loss.item(), **report)


def epoch_batches(n_items: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n_items)
    return [order[i:i + batch_size] for i in range(0, n_items, batch_size)]
