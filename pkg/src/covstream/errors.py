"""Exception types raised by covstream operations."""

import numpy as np


class CovStreamError(Exception):
    """Base class for all covstream errors."""


class DimensionMismatch(CovStreamError, ValueError):
    pass


class NonFiniteData(CovStreamError, ValueError):
    pass


class CountTooSmall(CovStreamError, ValueError):
    pass


class RemoveTooMany(CovStreamError, ValueError):
    pass


class DegenerateForm(CovStreamError, ValueError):
    pass


class NotPositiveDefinite(CovStreamError, np.linalg.LinAlgError):
    pass


class LostDefiniteness(CovStreamError, np.linalg.LinAlgError):
    """A downdate drove a pivot of the LDL factors to zero or below."""


class SingularFactor(CovStreamError, np.linalg.LinAlgError):
    pass


class MatrixFileError(CovStreamError, ValueError):
    """Malformed or inconsistent matrix/state file."""
