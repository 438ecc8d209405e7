from ccnp_lab.datagen.families import Family, FunctionFamilySpec, evaluate_family, sample_family_instantiation
from ccnp_lab.datagen.gp import GPKernelSpec, KernelKind, gp_gram, jittered_cholesky, sample_gp_instantiation
from ccnp_lab.datagen.instances import Instantiation, make_rng, spawn_seeds
from ccnp_lab.datagen.lotka_volterra import (
    GreekOrdering,
    LVConfig,
    LVMode,
    LVSourceSpec,
    lv_first_integral,
    sample_lv_config,
    simulate_lv,
)
from ccnp_lab.datagen.splits import (
    ContextTargetSplit,
    MetaDataset,
    Phase,
    make_meta_dataset,
    make_shifted_family_set,
    sample_split,
    split_sizes,
)

__all__ = [
    "ContextTargetSplit",
    "Family",
    "FunctionFamilySpec",
    "GPKernelSpec",
    "GreekOrdering",
    "Instantiation",
    "KernelKind",
    "LVConfig",
    "LVMode",
    "LVSourceSpec",
    "MetaDataset",
    "Phase",
    "evaluate_family",
    "gp_gram",
    "jittered_cholesky",
    "lv_first_integral",
    "make_meta_dataset",
    "make_rng",
    "make_shifted_family_set",
    "sample_family_instantiation",
    "sample_gp_instantiation",
    "sample_lv_config",
    "sample_split",
    "simulate_lv",
    "spawn_seeds",
]
