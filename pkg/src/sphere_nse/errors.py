"""Exception types raised across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class FormatError(ValueError):
    """A data file does not follow the expected layout."""


class UnsupportedDegreeError(ValueError):
    """Requested harmonic degree is above the tabulated maximum."""


class UnsupportedDerivativeError(ValueError):
    """The kernel family is not smooth enough for the requested derivative."""


class IllConditionedError(np.linalg.LinAlgError):
    """Cholesky factorization failed.

    Attributes
    ----------
    pivot : int or None
        Zero-based index of the first non-positive pivot, when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class StateError(RuntimeError):
    """An object was used before it was ready, or with stale cached data."""


class BlowUpError(RuntimeError):
    """The time integration produced non-finite or exploding coefficients.

    The last finite solver state is kept in ``last_state``.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(ValueError):
    """Invalid run configuration."""
