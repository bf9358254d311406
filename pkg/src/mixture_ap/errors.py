"""Exception types shared across the package."""


class MixtureError(Exception):
    """Base class for all errors raised by mixture_ap."""


class InvalidParameter(MixtureError, ValueError):
    """A parameter is outside its admissible range."""


class GridMismatch(MixtureError, ValueError):
    """Two fields do not live on the same velocity grid."""


class DegenerateDensity(MixtureError, ValueError):
    """Moments were requested for a field with non-positive mass or energy."""


class NoConvergence(MixtureError, RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class CFLViolation(MixtureError, ValueError):
    """The explicit transport step was asked to run above its stability bound."""


class StabilityViolation(MixtureError, ValueError):
    """The explicit reference integrator was asked to run with a step that is too large."""


class ConfigError(MixtureError, ValueError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed configuration text or unknown key."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(ConfigError):
    """A configuration value failed validation."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class MismatchedSeries(MixtureError, ValueError):
    """Two time series cannot be compared sample by sample."""
