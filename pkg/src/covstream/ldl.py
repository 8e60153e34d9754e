"""LDL factors of a covariance matrix and their rank-k maintenance.

An :class:`~covstream.core.LdlState` at rest always factors the normalized
covariance S. Inside a modification the diagonal is temporarily scaled to the
scatter ``(n - 1) * S`` so every observation contributes an exact rank-1 term,
and scaled back on exit.

The factor arrays are never modified in place: each operation works on
private copies and only returns them on success.
"""

import math

import numpy as np

from covstream import _kernels
from covstream.core import CovarianceState, LdlState, covariance, data_matrix
from covstream.errors import (
    DimensionMismatch,
    LostDefiniteness,
    NotPositiveDefinite,
    RemoveTooMany,
    SingularFactor,
)
from covstream.moments import mean_downdate, mean_update, mixed_shift

PIVOT_RTOL = 1e-13


def ldl_factor(s, kernels=None):
    """Unpivoted LDL^T factorization of a symmetric positive definite matrix.

    Only the lower triangle of ``s`` is read. Raises NotPositiveDefinite when
    a pivot falls to ``1e-13 * max(diag(s))`` or below.
    """
    ks = kernels or _kernels.active
    S = np.ascontiguousarray(s, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {S.shape}")
    m = S.shape[0]
    L = np.eye(m)
    D = np.zeros(m)
    tol = PIVOT_RTOL * max(float(np.max(np.abs(np.diag(S)))), 0.0) if m else 0.0
    status = ks.ldl_factor(S, L, D, tol)
    if status >= 0:
        raise NotPositiveDefinite(
            f"pivot {status} is not above the tolerance {tol:.3g}"
        )
    return L, D


def ldl_state(state: CovarianceState, kernels=None) -> LdlState:
    """Factor the covariance of a moments state."""
    L, D = ldl_factor(covariance(state), kernels)
    return LdlState(state.count, state.mean.copy(), L, D)


def rank1_modify(L, D, w, phi, kernels=None):
    """Factors of ``L diag(D) L^T + phi * w w^T`` for phi in {+1, -1}."""
    ks = kernels or _kernels.active
    if phi not in (1, -1):
        raise ValueError(f"phi must be +1 or -1, got {phi!r}")
    L2 = np.array(L, dtype=np.float64, order="C")
    D2 = np.array(D, dtype=np.float64)
    w2 = np.array(w, dtype=np.float64).reshape(-1)
    if w2.shape[0] != D2.shape[0]:
        raise DimensionMismatch("w does not match the factor dimension")
    status = ks.rank1_pass(L2, D2, w2, float(phi))
    if status >= 0:
        raise LostDefiniteness(f"pivot {status} became non-positive")
    return L2, D2


def _run_passes(ks, L, D, K, z, phi):
    status = ks.cov_ldl_passes(L, D, K, z, float(phi))
    if status >= 0:
        m = D.shape[0]
        raise LostDefiniteness(
            f"pivot {status % m} became non-positive at column {status // m}"
        )


def ldl_rank_k_modify(state: LdlState, y, phi, kernels=None) -> LdlState:
    """Add (phi=+1) or remove (phi=-1) the columns of ``y``.

    The K columns ``y_j - z`` with ``z = ybar - c (ybar - x1)`` and
    ``c = sqrt(n / (n + phi k))`` are formed one at a time inside the kernel.
    """
    ks = kernels or _kernels.active
    if phi not in (1, -1):
        raise ValueError(f"phi must be +1 or -1, got {phi!r}")
    m = state.dim
    Y = np.ascontiguousarray(data_matrix(y, rows=m))
    n, k = state.count, Y.shape[1]
    if k == 0:
        return state
    n2 = n + phi * k
    if n2 < 2:
        raise RemoveTooMany(
            f"removing {k} of {n} observations leaves fewer than 2"
        )
    ybar = Y.mean(axis=1)
    c = math.sqrt(n / n2)
    z = ybar - c * (ybar - state.mean)

    L = state.L.copy()
    D = state.D * (n - 1)
    _run_passes(ks, L, D, Y, z, phi)
    D /= n2 - 1

    if phi > 0:
        ms = mean_update(state.mean_state, Y)
    else:
        ms = mean_downdate(state.mean_state, Y)
    return LdlState(ms.count, ms.mean, L, D)


def ldl_mixed_modify(state: LdlState, y_add, y_remove, root="minus",
                     kernels=None) -> LdlState:
    """Two-pass mixed step: update passes over y_add, then downdate passes."""
    ks = kernels or _kernels.active
    m = state.dim
    Yu = np.ascontiguousarray(data_matrix(y_add, rows=m))
    Yd = np.ascontiguousarray(data_matrix(y_remove, rows=m))
    n1 = state.count
    if Yd.shape[1] > n1:
        raise RemoveTooMany(f"cannot remove {Yd.shape[1]} observations from {n1}")
    if Yu.shape[1] == 0 and Yd.shape[1] == 0:
        return state
    n2 = n1 + Yu.shape[1] - Yd.shape[1]
    if n2 < 2:
        raise RemoveTooMany(f"mixed step leaves {n2} observations, need at least 2")
    _, mean2, z = mixed_shift(n1, state.mean, Yu, Yd, root)

    L = state.L.copy()
    D = state.D * (n1 - 1)
    _run_passes(ks, L, D, Yu, z, 1)
    _run_passes(ks, L, D, Yd, z, -1)
    D /= n2 - 1
    return LdlState(n2, mean2, L, D)


def solve(state: LdlState, b, kernels=None):
    """Solve ``S x = b`` with forward substitution, diagonal scaling, back substitution."""
    ks = kernels or _kernels.active
    if not np.all(state.D > 0):
        raise SingularFactor("factor diagonal has non-positive entries")
    rhs = np.ascontiguousarray(b, dtype=np.float64).reshape(-1)
    if rhs.shape[0] != state.dim:
        raise DimensionMismatch(f"expected length {state.dim}, got {rhs.shape[0]}")
    L = np.ascontiguousarray(state.L)
    u = ks.forward_unit(L, rhs)
    return ks.backward_unit_t(L, u / state.D)


def mahalanobis_sq(state: LdlState, v, kernels=None) -> float:
    """Squared Mahalanobis distance of ``v`` from the state's mean."""
    ks = kernels or _kernels.active
    if not np.all(state.D > 0):
        raise SingularFactor("factor diagonal has non-positive entries")
    d = np.asarray(v, dtype=np.float64).reshape(-1) - state.mean
    u = ks.forward_unit(np.ascontiguousarray(state.L), d)
    # d^T S^-1 d = u^T D^-1 u with L u = d
    return float(np.sum(u * u / state.D))
