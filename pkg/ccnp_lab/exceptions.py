"""
Exception hierarchy shared by every ccnp-lab module.
"""


class CCNPLabError(Exception):
    """Base class for all lab errors."""


class ShapeError(CCNPLabError, ValueError):
    """Operand shapes do not conform for an op."""


class NonFiniteError(CCNPLabError, FloatingPointError):
    """A forward op or a loss produced NaN/Inf."""


class DegenerateInputError(CCNPLabError, ValueError):
    """Input is well-shaped but unusable (empty context, zero-norm embedding, ...)."""


class DatasetError(CCNPLabError):
    """Data generation, splitting or cache I/O failed."""


class CheckpointError(CCNPLabError):
    """A checkpoint does not match the configured architecture or is corrupt."""


class TrainingError(CCNPLabError):
    """An episode had to be aborted."""


class ConfigError(CCNPLabError, ValueError):
    """An experiment file or CLI flag violates the documented schema."""
