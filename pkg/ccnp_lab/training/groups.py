"""
Per-objective parameter groups.

    FCL step: psi, phi, h_F, g, rho_F
    TCL step: psi, phi, h_T, rho_P, varphi
    FRL step: psi, phi, h_C, g

psi is the identity on x and owns no parameters. phi only exists when the
projection head is shared; it then sits on the TCL ground-truth path. Each
branch's attention block travels with its pair encoder. The FRL group never
grows: a branch whose contrastive objective is off is not live in the model
(see CCNPModel.restrict_branches) and keeps its initial weights.
"""

from __future__ import annotations

from dataclasses import dataclass

from ccnp_lab.model.variants import CCNPModel
from ccnp_lab.tensor import Tensor

PHI = ("heads.phi.",)
FCL_PREFIXES = ("encoder.h_F.", "encoder.attn_F.", "decoder.", "heads.rho_F.") + PHI
TCL_PREFIXES = (
    "encoder.h_T.", "encoder.attn_T.", "heads.varphi.", "heads.rho_P.", "heads.obs_proj.",
) + PHI
FRL_PREFIXES = ("encoder.h_C.", "encoder.attn_C.", "decoder.") + PHI


def select(model: CCNPModel, prefixes: tuple[str, ...]) -> dict[str, Tensor]:
    return {name: p for name, p in model.named_parameters() if name.startswith(prefixes)}


@dataclass
class ParameterGroups:
    fcl: dict[str, Tensor]
    tcl: dict[str, Tensor]
    frl: dict[str, Tensor]

    @classmethod
    def for_model(cls, model: CCNPModel, tcl_active: bool = True, fcl_active: bool = True) -> "ParameterGroups":
        return cls(
            fcl=select(model, FCL_PREFIXES) if fcl_active else {},
            tcl=select(model, TCL_PREFIXES) if tcl_active else {},
            frl=select(model, FRL_PREFIXES),
        )

    @property
    def union(self) -> dict[str, Tensor]:
        merged = dict(self.frl)
        merged.update(self.tcl)
        merged.update(self.fcl)
        return merged

    def group(self, name: str) -> dict[str, Tensor]:
        if name == "combined":
            return self.union
        return getattr(self, name)
