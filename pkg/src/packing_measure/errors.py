"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A system, family or configuration failed validation."""


class ConfigError(ValidationError):
    """A configuration document could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class ResourceCapError(RuntimeError):
    """A generation would exceed the configured point-count cap."""


class GapEstimationError(RuntimeError):
    """No positive gap estimate could be obtained within the pre-pass budget."""


class TruncationError(ValueError):
    """A ball radius exceeds the cap at which a neighbor list was truncated."""


class UndefinedDensityError(ArithmeticError):
    """The discrete ball is empty so the density quotient is undefined."""
