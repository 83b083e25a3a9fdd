"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A run configuration is inconsistent or violates a resolution bound."""


class AccuracyError(RuntimeError):
    """A numerical routine could not reach its requested tolerance.

    Carries the best available estimate and its error bound so callers can
    decide whether to accept the degraded result.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class InstabilityError(RuntimeError):
    """A propagation produced physically impossible output (e.g. norm growth)."""
