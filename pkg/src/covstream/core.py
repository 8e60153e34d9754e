"""Domain types shared across covstream.

Observations are stored as COLUMNS: a data matrix has shape ``(m, n)`` with
``m`` features and ``n`` observations. File readers transpose row-oriented
input into this layout.
"""

from dataclasses import dataclass

import numpy as np

from covstream import _kernels
from covstream.errors import CountTooSmall, DimensionMismatch, NonFiniteData

#: Alias used in signatures; a float64 array of shape (m, n), columns = observations.
DataMatrix = np.ndarray


def data_matrix(values, rows=None) -> DataMatrix:
    """Validate ``values`` as an (m, n) float64 matrix of finite numbers.

    A 1-d input of length ``rows`` is read as a single observation. Any other
    1-d input is rejected, since it is ambiguous which way it is oriented.
    """
    X = np.asarray(values, dtype=np.float64)
    if X.ndim == 1:
        if rows is None or X.shape[0] != rows:
            raise DimensionMismatch(
                f"1-d input of length {X.shape[0]} cannot be read as one "
                f"observation of dimension {rows}"
            )
        X = X.reshape(rows, 1)
    elif X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got ndim={X.ndim}")
    if rows is not None and X.shape[0] != rows:
        raise DimensionMismatch(f"expected {rows} rows, got {X.shape[0]}")
    if X.shape[0] < 1:
        raise DimensionMismatch("a data matrix needs at least one feature row")
    if not np.all(np.isfinite(X)):
        raise NonFiniteData("data contains NaN or Inf")
    return X


def symmetrize_lower(P):
    """Copy the lower triangle of ``P`` onto the upper one."""
    P = np.tril(P)
    return P + np.tril(P, -1).T


@dataclass(frozen=True)
class MeanState:
    count: int
    mean: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]


@dataclass(frozen=True)
class CovarianceState:
    """Running count, mean column and unnormalized scatter ``(n - 1) * S``."""

    count: int
    mean: np.ndarray
    scatter: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def mean_state(self):
        return MeanState(self.count, self.mean)

    @classmethod
    def empty(cls, m):
        return cls(0, np.zeros(m), np.zeros((m, m)))


@dataclass(frozen=True)
class LdlState:
    """Factors of the covariance itself: ``S = L @ diag(D) @ L.T``."""

    count: int
    mean: np.ndarray
    L: np.ndarray
    D: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def mean_state(self):
        return MeanState(self.count, self.mean)

    def reconstruct(self):
        return reconstruct(self.L, self.D)


def reconstruct(L, D):
    return symmetrize_lower((L * D) @ L.T)


def from_columns(data, rows=None) -> CovarianceState:
    X = data_matrix(data, rows)
    m, n = X.shape
    if n == 0:
        return CovarianceState.empty(m)
    mean = X.sum(axis=1) / n
    if n == 1:
        return CovarianceState(1, mean, np.zeros((m, m)))
    C = X - mean[:, None]
    return CovarianceState(n, mean, symmetrize_lower(C @ C.T))


def covariance(state: CovarianceState, population=False):
    """Normalized covariance. ``population=True`` divides by n instead of n - 1."""
    if population:
        if state.count < 1:
            raise CountTooSmall("population covariance needs at least 1 observation")
        return state.scatter / state.count
    if state.count < 2:
        raise CountTooSmall(
            f"sample covariance needs at least 2 observations, have {state.count}"
        )
    return state.scatter / (state.count - 1)


def sym_accumulate(M, K, sign):
    """``M + sign * K @ K.T`` with the product formed on the lower triangle."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    if K.shape[1] == 0:
        return M.copy()
    return _kernels.active.sym_accumulate(np.ascontiguousarray(M), K, float(sign))
