"""Exception hierarchy. The CLI maps any DireError to exit code 1."""


class DireError(Exception):
    """Base class for all domain errors raised by this package."""


class DimensionError(DireError):
    """Shapes do not conform (wrong rank, mismatched sizes, empty axes)."""


class ParameterError(DireError):
    """A parameter violates its documented range or constraint."""


class NumericalError(DireError):
    """A computation produced non-finite values or failed to converge."""


class TrainingError(DireError):
    """Model training diverged."""


class FormatError(DireError):
    """A binary or text file does not match its expected format."""


class ConfigError(DireError):
    """A configuration document is malformed or violates an invariant."""
