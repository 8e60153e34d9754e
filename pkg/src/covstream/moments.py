"""Mean and covariance updates, downdates and mixed steps.

All operations are pure: they take a state and return a new one. The scatter
matrix ``(n - 1) * S`` is modified by exact rank-k terms, so no rescaling of
the stored matrix is ever needed.
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from covstream.core import (
    CovarianceState,
    MeanState,
    data_matrix,
    sym_accumulate,
)
from covstream.errors import DegenerateForm, RemoveTooMany

Branch = Literal["plus", "minus"]
Root = Literal["plus", "minus"]


@dataclass(frozen=True)
class KFactor:
    """m x k matrix whose outer product realizes a covariance modification.

    ``sign`` is +1 for an update and -1 for a downdate; ``branch`` records
    which root of the +/- in the shift coefficient was taken.
    """

    matrix: np.ndarray
    sign: int
    branch: str

    @property
    def k(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class MixedCoefficient:
    c: float
    root: str
    n1: int
    n2: int


def _columns(state, y):
    return data_matrix(y, rows=state.mean.shape[0])


def _check_branch(branch):
    if branch not in ("plus", "minus"):
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    return 1.0 if branch == "plus" else -1.0


# ---------------------------------------------------------------------------
# means
# ---------------------------------------------------------------------------


def mean_update(state: MeanState, y) -> MeanState:
    Y = _columns(state, y)
    k = Y.shape[1]
    if k == 0:
        return state
    n = state.count
    mean = (n * state.mean + Y.sum(axis=1)) / (n + k)
    return MeanState(n + k, mean)


def mean_downdate(state: MeanState, y) -> MeanState:
    Y = _columns(state, y)
    k = Y.shape[1]
    n = state.count
    if k > n:
        raise RemoveTooMany(f"cannot remove {k} observations from {n}")
    if k == 0:
        return state
    if k == n:
        return MeanState(0, np.zeros_like(state.mean))
    mean = (n * state.mean - Y.sum(axis=1)) / (n - k)
    return MeanState(n - k, mean)


def _mixed_mean(count, mean, Yu, Yd):
    n2 = count + Yu.shape[1] - Yd.shape[1]
    if n2 == 0:
        return n2, np.zeros_like(mean)
    total = count * mean + Yu.sum(axis=1) - Yd.sum(axis=1)
    return n2, total / n2


# ---------------------------------------------------------------------------
# K factors
# ---------------------------------------------------------------------------


def _shifted(Y, ybar, ref, coef, sgn):
    z = ybar + sgn * coef * (ybar - ref)
    return Y - z[:, None]


def make_k_downdate(state: CovarianceState, y, branch: Branch = "minus") -> KFactor:
    sgn = _check_branch(branch)
    Y = _columns(state, y)
    n, k = state.count, Y.shape[1]
    if k < 1:
        raise ValueError("a downdate K-factor needs at least one column")
    if k >= n:
        raise RemoveTooMany(
            f"downdate K-factor needs k <= n - 1 (k={k}, n={n})"
        )
    ybar = Y.mean(axis=1)
    coef = math.sqrt(n / (n - k))
    return KFactor(_shifted(Y, ybar, state.mean, coef, sgn), -1, branch)


def make_k_update(
    state: CovarianceState,
    y,
    branch: Branch = "minus",
    form: Literal["prior_mean", "posterior_mean"] = "prior_mean",
) -> KFactor:
    """K-factor for appending the columns of ``y``.

    ``prior_mean`` shifts against the current mean with coefficient
    sqrt(n / (n + k)); ``posterior_mean`` shifts against the updated mean with
    sqrt((n + k) / n) and is undefined for an empty prior.
    """
    sgn = _check_branch(branch)
    Y = _columns(state, y)
    n, k = state.count, Y.shape[1]
    if k < 1:
        raise ValueError("an update K-factor needs at least one column")
    ybar = Y.mean(axis=1)
    if form == "prior_mean":
        coef = math.sqrt(n / (n + k))
        ref = state.mean
    elif form == "posterior_mean":
        if n == 0:
            raise DegenerateForm("posterior_mean form is undefined for n = 0")
        coef = math.sqrt((n + k) / n)
        ref = mean_update(state.mean_state, Y).mean
    else:
        raise ValueError(f"unknown K form {form!r}")
    return KFactor(_shifted(Y, ybar, ref, coef, sgn), 1, branch)


def _finish(count, mean, scatter):
    if count <= 1:
        scatter = np.zeros_like(scatter)
    if count == 0:
        mean = np.zeros_like(mean)
    return CovarianceState(count, mean, scatter)


def apply_rank_k(state: CovarianceState, kf: KFactor, y) -> CovarianceState:
    Y = _columns(state, y)
    if kf.k == 0 or Y.shape[1] == 0:
        return state
    if kf.k != Y.shape[1]:
        raise ValueError("K-factor width does not match the observation count")
    if kf.sign > 0:
        ms = mean_update(state.mean_state, Y)
    else:
        ms = mean_downdate(state.mean_state, Y)
    scatter = sym_accumulate(state.scatter, kf.matrix, kf.sign)
    return _finish(ms.count, ms.mean, scatter)


def update(state: CovarianceState, y, branch: Branch = "minus",
           form="prior_mean") -> CovarianceState:
    """Append the columns of ``y``."""
    Y = _columns(state, y)
    if Y.shape[1] == 0:
        return state
    return apply_rank_k(state, make_k_update(state, Y, branch, form), Y)


def downdate(state: CovarianceState, y, branch: Branch = "minus") -> CovarianceState:
    """Remove the columns of ``y``; removing everything yields the empty state."""
    Y = _columns(state, y)
    k = Y.shape[1]
    if k == 0:
        return state
    if k > state.count:
        raise RemoveTooMany(f"cannot remove {k} observations from {state.count}")
    if k == state.count:
        return CovarianceState.empty(state.dim)
    return apply_rank_k(state, make_k_downdate(state, Y, branch), Y)


def downdate_asymmetric(state: CovarianceState, y) -> CovarianceState:
    """Downdate with the two-mean factor (Y - x1)(Y - x2)^T."""
    Y = _columns(state, y)
    n, k = state.count, Y.shape[1]
    if k == 0:
        return state
    if k >= n:
        raise RemoveTooMany(f"asymmetric downdate needs k <= n - 1 (k={k}, n={n})")
    ms = mean_downdate(state.mean_state, Y)
    A = Y - state.mean[:, None]
    B = Y - ms.mean[:, None]
    P = A @ B.T
    scatter = state.scatter - 0.5 * (P + P.T)
    return _finish(ms.count, ms.mean, scatter)


# ---------------------------------------------------------------------------
# mixed steps
# ---------------------------------------------------------------------------


def mixed_coefficient(n1: int, n2: int, root: Root = "minus") -> MixedCoefficient:
    """Shift coefficient c solving (n2 - n1) c^2 - 2 n2 c + n2 = 0.

    For n1 == n2 the quadratic degenerates and c = 1/2. The default
    ``minus`` root is the one of smaller magnitude.
    """
    if n1 < 0 or n2 < 0 or (n1 == 0 and n2 == 0):
        raise ValueError(f"invalid counts n1={n1}, n2={n2}")
    if root not in ("plus", "minus"):
        raise ValueError(f"root must be 'plus' or 'minus', got {root!r}")
    if n1 == n2:
        return MixedCoefficient(0.5, "half", n1, n2)
    if n2 == 0:
        # -n1 c^2 = 0: both roots collapse to zero
        return MixedCoefficient(0.0, root, n1, n2)
    # (n2 - sqrt(n1 n2)) / (n2 - n1) rewritten without cancellation; the
    # other root follows from the product of roots, n2 / (n2 - n1).
    small = math.sqrt(n2) / (math.sqrt(n1) + math.sqrt(n2))
    if root == "minus":
        return MixedCoefficient(small, root, n1, n2)
    return MixedCoefficient(n2 / ((n2 - n1) * small), root, n1, n2)


def _mixed_inputs(state, y_add, y_remove):
    Yu = _columns(state, y_add)
    Yd = _columns(state, y_remove)
    if Yd.shape[1] > state.count:
        raise RemoveTooMany(
            f"cannot remove {Yd.shape[1]} observations from {state.count}"
        )
    return Yu, Yd


def mixed_shift(count, mean, Yu, Yd, root: Root = "minus"):
    """Posterior count and mean, and the shared shift z = x1 + c (x2 - x1).

    K_u = Y_u - z and K_d = Y_d - z then satisfy
    (n2 - 1) S2 = (n1 - 1) S1 + K_u K_u^T - K_d K_d^T.
    """
    n2, mean2 = _mixed_mean(count, mean, Yu, Yd)
    cf = mixed_coefficient(count, n2, root)
    return n2, mean2, mean + cf.c * (mean2 - mean)


def mixed_update_downdate(state: CovarianceState, y_add, y_remove,
                          root: Root = "minus") -> CovarianceState:
    Yu, Yd = _mixed_inputs(state, y_add, y_remove)
    if Yu.shape[1] == 0 and Yd.shape[1] == 0:
        return state
    n2, mean2, z = mixed_shift(state.count, state.mean, Yu, Yd, root)
    scatter = sym_accumulate(state.scatter, Yu - z[:, None], 1.0)
    scatter = sym_accumulate(scatter, Yd - z[:, None], -1.0)
    return _finish(n2, mean2, scatter)


def mixed_two_mean(state: CovarianceState, y_add, y_remove) -> CovarianceState:
    """Mixed step via the two-mean factors (Y - x1)(Y - x2)^T."""
    Yu, Yd = _mixed_inputs(state, y_add, y_remove)
    if Yu.shape[1] == 0 and Yd.shape[1] == 0:
        return state
    n2, mean2 = _mixed_mean(state.count, state.mean, Yu, Yd)
    x1 = state.mean[:, None]
    x2 = mean2[:, None]
    P = (Yu - x1) @ (Yu - x2).T - (Yd - x1) @ (Yd - x2).T
    scatter = state.scatter + 0.5 * (P + P.T)
    return _finish(n2, mean2, scatter)
