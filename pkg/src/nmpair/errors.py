"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UsageError(ValueError):
    """An operation was called with inconsistent arguments (wrong basis, mismatched kernel, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its requested accuracy.

    Parameters
    ----------
    message : str
        Human readable description.
    achieved : float, optional
        Accuracy actually reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NumericalRangeError(NumericalError):
    """Evaluation requested outside the range where the result is representable or well conditioned."""


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree (indicates a build bug)."""
