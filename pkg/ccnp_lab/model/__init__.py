from ccnp_lab.model.batch import EpisodeBatch, SegmentLayout, split_context
from ccnp_lab.model.checkpoint import load_checkpoint, parameter_digest, save_checkpoint
from ccnp_lab.model.decoder import DecoderStack, GaussianPrediction, RepresentationBundle, decode, gaussian_scale
from ccnp_lab.model.encoder import Branch, EncoderStack, aggregate, encode_context
from ccnp_lab.model.heads import Heads, fcl_embed, tcl_embed
from ccnp_lab.model.variants import CCNPModel, build_variant

__all__ = [
    "Branch",
    "CCNPModel",
    "DecoderStack",
    "EncoderStack",
    "EpisodeBatch",
    "GaussianPrediction",
    "Heads",
    "RepresentationBundle",
    "SegmentLayout",
    "aggregate",
    "build_variant",
    "decode",
    "encode_context",
    "fcl_embed",
    "gaussian_scale",
    "load_checkpoint",
    "parameter_digest",
    "save_checkpoint",
    "split_context",
    "tcl_embed",
]
