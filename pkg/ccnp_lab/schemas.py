"""
Pydantic v2 schemas for experiment files and for the reports runs emit.
"""

from __future__ import annotations

import enum
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ccnp_lab.datagen.families import Family, FunctionFamilySpec
from ccnp_lab.datagen.gp import GPKernelSpec, KernelKind
from ccnp_lab.datagen.lotka_volterra import GreekOrdering, LVMode, LVSourceSpec
from ccnp_lab.datagen.splits import SourceSpec


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ─── Dataset ────────────────────────────────────────────

class DatasetKind(str, enum.Enum):
    FAMILY = "family"
    GP = "gp"
    LV = "lv"


class DatasetConfig(StrictModel):
    """One cached meta-dataset: which generator, how many draws, how to split."""

    name: str = Field(min_length=1)
    kind: DatasetKind = DatasetKind.FAMILY
    seed: int = Field(0, ge=0)
    count: int = Field(500, ge=11)
    split_ratio: tuple[float, float, float] = (9.0, 1.0, 1.0)
    n_points: int = Field(100, ge=2)
    x_range: Optional[tuple[float, float]] = None

    # 1D families
    families: list[Family] = [Family.SINUSOID]
    alpha_range: tuple[float, float] = (-1.0, 1.0)
    beta_range: tuple[float, float] = (-0.5, 0.5)

    # GP
    kernel: KernelKind = KernelKind.RBF
    lengthscale: float = Field(1.0, gt=0)
    period: float = Field(1.0, gt=0)
    nu: float = Field(2.5, gt=0)
    noise_std: float = Field(0.02, ge=0)

    # LV
    lv_mode: LVMode = LVMode.GREEK
    lv_ordering: GreekOrdering = GreekOrdering.STANDARD
    steps: int = Field(150, ge=2)
    dt: float = Field(0.01, gt=0)
    substeps: int = Field(1, ge=1)

    @field_validator("split_ratio")
    @classmethod
    def _positive_weights(cls, v):
        if min(v) <= 0:
            raise ValueError(f"split weights must be positive, got {v}")
        return v

    @field_validator("families")
    @classmethod
    def _some_family(cls, v):
        if not v:
            raise ValueError("at least one family is required")
        return v

    def sources(self) -> list[SourceSpec]:
        if self.kind is DatasetKind.FAMILY:
            return [
                FunctionFamilySpec(
                    family=f,
                    alpha_range=self.alpha_range,
                    beta_range=self.beta_range,
                    x_range=self.x_range or FunctionFamilySpec.default(f).x_range,
                )
                for f in self.families
            ]
        if self.kind is DatasetKind.GP:
            return [GPKernelSpec(
                kind=self.kernel, lengthscale=self.lengthscale, period=self.period,
                nu=self.nu, noise_std=self.noise_std,
            )]
        return [LVSourceSpec(
            mode=self.lv_mode, ordering=self.lv_ordering,
            steps=self.steps, dt=self.dt, substeps=self.substeps,
        )]

    @property
    def sequence_length(self) -> int:
        return self.steps if self.kind is DatasetKind.LV else self.n_points

    @property
    def y_dim(self) -> int:
        return 2 if self.kind is DatasetKind.LV else 1

    @property
    def default_extra_target(self) -> int:
        return 20 if self.kind is DatasetKind.LV else 10

    @property
    def mse_scale(self) -> float:
        """Display multiplier for reconstruction MSE (x10^2 for 1D families)."""
        return 100.0 if self.kind is DatasetKind.FAMILY else 1.0


# ─── Model / objectives / training ──────────────────────

class VariantKind(str, enum.Enum):
    CNP = "CNP"
    ATTN_CNP = "AttnCNP"
    CCNP = "CCNP"
    CCNP_MINUS_ATTN = "CCNP-Attn"
    CCNP_MINUS_TCL = "CCNP-TCL"
    CCNP_MINUS_FCL = "CCNP-FCL"

    @property
    def uses_attention(self) -> bool:
        return self not in (VariantKind.CNP, VariantKind.CCNP_MINUS_ATTN)

    @property
    def uses_tcl(self) -> bool:
        return self in (VariantKind.CCNP, VariantKind.CCNP_MINUS_ATTN, VariantKind.CCNP_MINUS_FCL)

    @property
    def uses_fcl(self) -> bool:
        return self in (VariantKind.CCNP, VariantKind.CCNP_MINUS_ATTN, VariantKind.CCNP_MINUS_TCL)

    @property
    def is_contrastive(self) -> bool:
        return self.uses_tcl or self.uses_fcl


class ModelDims(StrictModel):
    x_dim: int = Field(1, ge=1)
    y_dim: int = Field(1, ge=1)
    hidden: int = Field(64, ge=1)
    encoder_layers: int = Field(4, ge=1)
    decoder_layers: int = Field(4, ge=1)
    heads: int = Field(4, ge=1)
    z_dim: int = Field(8, ge=1)
    shared_projection: bool = False

    @model_validator(mode="after")
    def _heads_divide_width(self):
        if self.hidden % self.heads:
            raise ValueError(f"hidden={self.hidden} is not divisible by heads={self.heads}")
        return self

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


class LossWeights(StrictModel):
    """alpha/beta weight TCL/FCL in the combined objective; tau is the InfoNCE temperature."""

    alpha: float = Field(1.0, ge=0)
    beta: float = Field(1.0, ge=0)
    tau: float = Field(0.5, gt=0)


class Schedule(str, enum.Enum):
    SEQUENTIAL = "sequential"
    COMBINED = "combined"


class TrainConfig(StrictModel):
    epochs: int = Field(25, ge=1)
    batch_size: int = Field(16, ge=1)
    lr_frl: float = Field(1e-3, ge=0)
    lr_tcl: float = Field(1e-3, ge=0)
    lr_fcl: float = Field(1e-3, ge=0)
    weights: LossWeights = LossWeights()
    disable_attn: bool = False
    disable_tcl: bool = False
    disable_fcl: bool = False
    schedule: Schedule = Schedule.SEQUENTIAL
    seed: int = Field(0, ge=0)
    max_context: int = Field(5, ge=1)
    max_extra_target: Optional[int] = Field(None, ge=1)
    grad_clip: Optional[float] = Field(10.0, gt=0)
    val_shots: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _fcl_needs_pairs(self):
        if not self.disable_fcl and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 when the function-contrastive loss is enabled")
        return self


# ─── Evaluation ─────────────────────────────────────────

class EvalConfig(StrictModel):
    shots: list[int] = [5]
    split: str = "test"
    seed: int = Field(0, ge=0)
    shifted_alpha_range: Optional[tuple[float, float]] = None
    shifted_count: int = Field(50, ge=1)

    @field_validator("shots")
    @classmethod
    def _positive_shots(cls, v):
        if not v or min(v) < 1:
            raise ValueError(f"shots must be a non-empty list of positive counts, got {v}")
        return v

    @field_validator("split")
    @classmethod
    def _known_split(cls, v):
        if v not in ("train", "val", "test"):
            raise ValueError(f"split must be train, val or test, got {v!r}")
        return v


class CoeffProbeConfig(StrictModel):
    """Regressor on frozen representations predicting a sinusoid's (alpha, beta)."""

    checkpoint: Optional[str] = None
    hidden: int = Field(32, ge=1)
    epochs: int = Field(200, ge=1)
    lr: float = Field(1e-3, gt=0)
    batch_size: int = Field(32, ge=1)
    shots: int = Field(5, ge=1)
    train_split: str = "train"
    test_split: str = "test"
    seed: int = Field(0, ge=0)


class SweepConfig(StrictModel):
    dims: list[int] = [8, 16, 32, 64, 128]
    variant: VariantKind = VariantKind.CCNP

    @field_validator("dims")
    @classmethod
    def _non_empty(cls, v):
        if not v or min(v) < 1:
            raise ValueError(f"dims must be a non-empty list of positive sizes, got {v}")
        return v


class ExperimentConfig(StrictModel):
    name: str = Field(min_length=1)
    dataset: DatasetConfig
    model: ModelDims = ModelDims()
    train: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    variants: list[VariantKind] = [VariantKind.CNP, VariantKind.ATTN_CNP, VariantKind.CCNP]
    seeds: list[int] = [0]
    probe: Optional[CoeffProbeConfig] = None
    sweep: Optional[SweepConfig] = None

    @model_validator(mode="after")
    def _resolve_dims(self):
        if "y_dim" not in self.model.model_fields_set:
            self.model = self.model.model_copy(update={"y_dim": self.dataset.y_dim})
        elif self.model.y_dim != self.dataset.y_dim:
            raise ValueError(
                f"model.y_dim={self.model.y_dim} does not match dataset y_dim={self.dataset.y_dim}"
            )
        extra = self.train.max_extra_target or self.dataset.default_extra_target
        if self.train.max_context + extra > self.dataset.sequence_length:
            raise ValueError("train.max_context + max_extra_target exceeds the sequence length")
        if max(self.eval.shots) > self.dataset.sequence_length:
            raise ValueError("eval.shots exceeds the sequence length")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        return self

    @property
    def max_extra_target(self) -> int:
        return self.train.max_extra_target or self.dataset.default_extra_target


# ─── Reports ────────────────────────────────────────────

class EpisodeReport(BaseModel):
    """Pre-step loss values of one batch; absent objectives stay None."""

    frl: float
    tcl: Optional[float] = None
    fcl: Optional[float] = None


class EpochRecord(BaseModel):
    epoch: int
    frl: float
    tcl: Optional[float] = None
    fcl: Optional[float] = None
    val_ll: float


def _mean_std(values: list[float]) -> tuple[float, Optional[float]]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if len(arr) >= 2 else None
    return mean, std


class MetricReport(BaseModel):
    """
    Raw per-seed metrics plus the display multipliers.

    Displayed value = raw value * scale; the raw numbers are what is stored.
    """

    variant: str
    shots: int
    seeds: list[int]
    predictive_ll: list[float]
    recon_mse: list[float]
    ll_scale: float = 1e-2
    mse_scale: float = 100.0

    @property
    def ll_mean(self) -> float:
        return _mean_std(self.predictive_ll)[0]

    @property
    def ll_std(self) -> Optional[float]:
        return _mean_std(self.predictive_ll)[1]

    @property
    def mse_mean(self) -> float:
        return _mean_std(self.recon_mse)[0]

    @property
    def mse_std(self) -> Optional[float]:
        return _mean_std(self.recon_mse)[1]

    def table_row(self) -> dict:
        nan = math.nan
        return {
            "variant": self.variant,
            "shots": self.shots,
            "ll_mean": self.ll_mean,
            "ll_std": nan if self.ll_std is None else self.ll_std,
            "mse_mean": self.mse_mean,
            "mse_std": nan if self.mse_std is None else self.mse_std,
            "ll_scale": self.ll_scale,
            "mse_scale": self.mse_scale,
            "ll_display": self.ll_mean * self.ll_scale,
            "mse_display": self.mse_mean * self.mse_scale,
            "n_seeds": len(self.seeds),
        }


class ProbeReport(BaseModel):
    variant: str
    seed: int
    alpha_mse: float
    beta_mse: float
    combined_mse: float
    digest_before: str
    digest_after: str


class JobFailure(BaseModel):
    kind: str
    variant: Optional[str] = None
    seed: Optional[int] = None
    error: str


class RunSummary(BaseModel):
    experiment: str
    dataset: str
    variants: list[str]
    seeds: list[int]
    jobs: int
    failures: list[JobFailure] = []
    outputs: dict[str, str] = {}

    @property
    def ok(self) -> bool:
        return not self.failures
