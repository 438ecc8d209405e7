"""
CCNPModel and the ablation variants.

Every variant builds the same components in the same order from one seed,
so two variants built from the same seed start from identical weights.
What differs is whether aggregation uses attention and which contrastive
objectives the trainer runs. A branch no objective trains (T without TCL,
F without FCL) is not live: the decoder sees a constant zero in its slot.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from ccnp_lab.datagen.instances import SeedLike, make_rng
from ccnp_lab.exceptions import ConfigError
from ccnp_lab.model.batch import EpisodeBatch, SegmentLayout
from ccnp_lab.model.decoder import DecoderStack, GaussianPrediction, RepresentationBundle
from ccnp_lab.model.encoder import Branch, EncoderStack
from ccnp_lab.model.heads import Heads, fcl_views
from ccnp_lab.schemas import ModelDims, VariantKind
from ccnp_lab.tensor import Module, Tensor, no_grad


class CCNPModel(Module):
    def __init__(self, kind: VariantKind, dims: ModelDims, rng: np.random.Generator, use_attention: Optional[bool] = None):
        self.encoder = EncoderStack(dims, rng, use_attention=kind.uses_attention if use_attention is None else use_attention)
        self.decoder = DecoderStack(dims, rng)
        self.heads = Heads(dims, rng)
        self.kind = kind
        self.dims = dims
        self.live = default_branches(kind)

    @property
    def use_attention(self) -> bool:
        return self.encoder.use_attention

    def restrict_branches(self, tcl: bool, fcl: bool) -> None:
        """Keep T and F live only while their objective trains them."""
        self.live = frozenset(
            b for b in default_branches(self.kind)
            if b is Branch.C or (b is Branch.T and tcl) or (b is Branch.F and fcl)
        )

    def branch(self, branch: "Branch | str", layout: SegmentLayout) -> Tensor:
        branch = Branch(branch)
        if branch in self.live:
            return self.encoder.represent(branch, layout)
        return Tensor(np.zeros((layout.batch_size, self.dims.hidden)))

    def represent(self, layout: SegmentLayout) -> RepresentationBundle:
        return RepresentationBundle(
            r_C=self.branch(Branch.C, layout),
            r_T=self.branch(Branch.T, layout),
            r_F=self.branch(Branch.F, layout),
        )

    def predict(self, batch: EpisodeBatch, bundle: Optional[RepresentationBundle] = None) -> GaussianPrediction:
        bundle = bundle if bundle is not None else self.represent(batch.context)
        return self.decoder.decode_batch(batch.target_x, bundle, batch.target_segment)

    def tcl_embeddings(self, batch: EpisodeBatch, r_T: Optional[Tensor] = None) -> tuple[Tensor, Tensor]:
        r_T = r_T if r_T is not None else self.encoder.represent(Branch.T, batch.context)
        return self.heads.tcl_batch(batch.target_x, r_T, batch.target_segment, batch.target_y)

    def fcl_embeddings(self, batch: EpisodeBatch) -> tuple[Tensor, Tensor]:
        if batch.views is None:
            raise ConfigError("fcl_embeddings: batch was built without context views")
        return fcl_views(self.encoder, self.heads, batch.views)

    def probe_representation(self, layout: SegmentLayout) -> np.ndarray:
        """Frozen features for coefficient probing: the live branches, concatenated in C, T, F order."""
        with no_grad():
            parts = [self.encoder.represent(b, layout).numpy() for b in Branch if b in self.live]
        return np.concatenate(parts, axis=-1)


def default_branches(kind: VariantKind) -> frozenset:
    branches = {Branch.C}
    if kind.uses_tcl:
        branches.add(Branch.T)
    if kind.uses_fcl:
        branches.add(Branch.F)
    return frozenset(branches)


def parse_branches(values: Iterable[str]) -> frozenset:
    return frozenset(Branch(v) for v in values)


def build_variant(kind: "VariantKind | str", dims: ModelDims, seed: SeedLike = 0, use_attention: Optional[bool] = None) -> CCNPModel:
    try:
        kind = VariantKind(kind)
    except ValueError as e:
        known = ", ".join(k.value for k in VariantKind)
        raise ConfigError(f"unknown variant {kind!r} (known: {known})") from e
    return CCNPModel(kind, dims, make_rng(seed), use_attention=use_attention)
