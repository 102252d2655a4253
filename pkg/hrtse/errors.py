"""Exception hierarchy shared by every hrtse module."""


class HrTseError(Exception):
    """Base class for all errors raised by hrtse."""


class UsageError(HrTseError):
    """Bad command-line usage (unknown flag, missing argument)."""


class ConfigError(HrTseError):
    """Invalid or inconsistent configuration."""


class ShapeError(HrTseError):
    """Tensor shape does not match what a layer or operation expects."""


class TooShortError(HrTseError):
    """Audio is shorter than the minimum an operation needs."""


class ConfigMismatchError(HrTseError):
    """Data was produced with a different configuration than the one supplied."""


class DomainError(HrTseError):
    """Argument outside the mathematical domain of an operation."""


class ManifestError(HrTseError):
    """Manifest file is malformed or references missing records."""


class InsufficientAnchorError(ManifestError):
    """Target speaker has no utterance that can serve as an anchor."""


class UndefinedMetricError(HrTseError):
    """Metric is undefined for the given inputs (e.g. all-zero reference)."""


class CheckpointError(HrTseError):
    """Checkpoint is missing, corrupt, or incompatible with the config."""


class NonFiniteLossError(HrTseError):
    """Training produced a NaN or infinite loss."""
