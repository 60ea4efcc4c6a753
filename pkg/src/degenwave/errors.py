"""Exception types shared across the package."""


class DegenwaveError(Exception):
    pass


class InvalidParams(DegenwaveError, ValueError):
    pass


class InvalidFlux(InvalidParams):
    pass


class OutOfBranch(DegenwaveError, ValueError):
    pass


class NoBracket(DegenwaveError, ValueError):
    pass


class NoConvergence(DegenwaveError, RuntimeError):
    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class CaseUnsupported(DegenwaveError, ValueError):
    pass


class DomainTooSmall(DegenwaveError, ValueError):
    pass


class Instability(DegenwaveError, RuntimeError):
    pass


class InvalidQ(DegenwaveError, ValueError):
    pass


class InsufficientData(DegenwaveError, ValueError):
    pass


class NonPositiveValues(DegenwaveError, ValueError):
    pass


class DegenerateRatio(DegenwaveError, ZeroDivisionError):
    """Raised when a ratio is requested for an identically vanishing field."""


class ConfigError(DegenwaveError, ValueError):
    pass


class DegenerateSecondDerivative(UserWarning):
    """The contact-wave second derivative is unbounded at the free boundary (p > 2)."""
