"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A physical or algorithmic parameter is outside its valid range."""


class ShapeError(ValueError):
    """Array dimensions do not match."""


class SolverError(RuntimeError):
    """A linear system could not be solved (singular or rank-deficient)."""


class DivergenceError(RuntimeError):
    """Non-finite quantities appeared during negotiation."""


class MitigationUnavailableError(RuntimeError):
    """The estimated dual map is too ill-conditioned to invert."""


class ConfigError(ValueError):
    """Scenario file failed to parse or validate."""
