import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class ConditioningError(np.linalg.LinAlgError):
    """Cholesky factorization failed.

    ``pivot`` is the 1-based order of the leading minor that was not
    positive definite.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class LevelError(ValueError):
    """Requested level is not attainable with the available number of scores."""
