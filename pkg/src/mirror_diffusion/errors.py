"""Exception types shared across the library."""


class MirrorDiffusionError(Exception):
    """Base class for all library errors."""


class DomainError(MirrorDiffusionError, ValueError):
    """A point lies outside its declared domain beyond tolerance."""


class UnsupportedError(MirrorDiffusionError):
    """Operation not defined for this mirror map / domain combination."""


class ShapeError(MirrorDiffusionError, ValueError):
    """Array dimensions do not match the declared architecture."""


class EncodingError(MirrorDiffusionError, ValueError):
    """Input tensor violates an encoding precondition (e.g. not one-hot)."""


class ConfigError(MirrorDiffusionError, ValueError):
    """Invalid or incomplete experiment configuration."""


class InsufficientDataError(MirrorDiffusionError, ValueError):
    """Too few samples for the requested statistic."""


class NonFiniteLossError(MirrorDiffusionError, RuntimeError):
    """Training loss became NaN or infinite."""


class ScoreModelError(MirrorDiffusionError, RuntimeError):
    """Score model failed to evaluate."""


class CheckpointError(MirrorDiffusionError, ValueError):
    """Checkpoint file is malformed or incompatible with the architecture."""
