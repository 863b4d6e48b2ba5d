"""Exception types raised across the package."""


class SubmaxError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SubmaxError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(SubmaxError, ValueError):
    """A numeric argument lies outside the domain of a formula."""


class NoRootError(SubmaxError):
    """The threshold equation has no sign change on the searched interval.

    Attributes carry the bracket that was tried and the sign of the
    objective at each endpoint, so callers can report why it failed.
    """

    def __init__(self, message, lower, upper, lower_value, upper_value, regime):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.lower_value = lower_value
        self.upper_value = upper_value
        self.regime = regime


class BudgetError(SubmaxError):
    """Exhaustive enumeration would exceed the configured candidate budget."""

    def __init__(self, message, required, budget):
        super().__init__(message)
        self.required = required
        self.budget = budget


class MatrixFormatError(SubmaxError):
    """A matrix file could not be parsed."""
