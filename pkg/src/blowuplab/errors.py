"""Shared exception types."""


class BlowupLabError(Exception):
    """Base class for all package errors."""


class MissingKey(BlowupLabError):
    """A required configuration key is absent."""


class ConstraintViolation(BlowupLabError):
    """A parameter constraint is violated; the message names the inequality."""


class DomainError(BlowupLabError):
    """An input lies outside the mathematical domain of the operation."""


class ConfigError(BlowupLabError):
    """Configuration values are individually valid but mutually inconsistent."""


class GridTooCoarse(BlowupLabError):
    """Quadrature self-test failed beyond tolerance."""


class NoRoot(BlowupLabError):
    """Root finder could not bracket a solution."""


class OutOfDomain(BlowupLabError):
    """A requested space-time point is not covered by stored data."""


class PositivityLoss(BlowupLabError):
    """The real part of the field dropped to zero or below."""


class Overflow(BlowupLabError):
    """The field exceeded the blowup threshold (expected terminal event)."""


class ContractionFailure(BlowupLabError):
    """Picard iterates diverged; the time window is too large."""


class SeriesTooShort(BlowupLabError):
    """Not enough samples for the requested finite-difference stencil."""


class BudgetExhausted(BlowupLabError):
    """Search budget ran out; carries the best sample so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
