"""Exceptions raised by correlated_paths."""


class CorrelatedPathsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CorrelatedPathsError, ValueError):
    """An argument lies outside the domain of a mathematical operation."""


class ValidationError(CorrelatedPathsError):
    """An experiment configuration failed validation."""

    def __init__(self, message, key=None):
        """Store the offending configuration key alongside the message."""
        super().__init__(message)
        self.key = key


class BudgetExceededError(CorrelatedPathsError):
    """An enumeration was refused because the class is larger than the budget."""

    def __init__(self, message, bound=None, budget=None):
        """Store the count bound and the budget that refused it."""
        super().__init__(message)
        self.bound = bound
        self.budget = budget


class FitError(CorrelatedPathsError):
    """An exponential envelope could not be fitted to an intersection tail table."""
