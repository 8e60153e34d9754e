"""Hot inner loops, in two interchangeable flavours.

Every kernel exists as a numba ``@njit`` function and as a pure-numpy
function with the same signature and the same in-place semantics. The
active set is chosen once at import time:

* ``COVSTREAM_DISABLE_NUMBA=1`` forces the numpy path;
* a missing numba install falls back to numpy silently.

Kernels that can fail return a status integer (``-1`` on success, otherwise
the offending pivot index) instead of raising, so the numba versions stay in
nopython mode. Callers translate statuses into exceptions.
"""

import os
from types import SimpleNamespace

import numpy as np

# ---------------------------------------------------------------------------
# pure numpy
# ---------------------------------------------------------------------------


def sym_accumulate_np(M, K, sign):
    P = K @ K.T
    P = np.tril(P)
    P = P + np.tril(P, -1).T
    return M + sign * P


def ldl_factor_np(S, L, D, tol):
    m = S.shape[0]
    v = np.empty(m)
    for j in range(m):
        v[:j] = L[j, :j] * D[:j]
        dj = S[j, j] - L[j, :j] @ v[:j]
        if not dj > tol:
            return j
        D[j] = dj
        if j + 1 < m:
            L[j + 1:, j] = (S[j + 1:, j] - L[j + 1:, :j] @ v[:j]) / dj
    return -1


def rank1_pass_np(L, D, w, alpha):
    m = D.shape[0]
    for i in range(m):
        wi = w[i]
        wi2 = wi * wi
        d_old = D[i]
        d_new = d_old + wi2 / alpha
        if not d_new > 0.0:
            return i
        gamma = wi / (alpha * d_old + wi2)
        D[i] = d_new
        alpha = alpha + wi2 / d_old
        if i + 1 < m:
            w[i + 1:] -= wi * L[i + 1:, i]
            L[i + 1:, i] += gamma * w[i + 1:]
    return -1


def cov_ldl_passes_np(L, D, Y, z, phi):
    m, k = Y.shape
    for j in range(k):
        w = Y[:, j] - z
        status = rank1_pass_np(L, D, w, phi)
        if status >= 0:
            return j * m + status
    return -1


def forward_unit_np(L, b):
    m = b.shape[0]
    u = np.empty(m)
    for i in range(m):
        u[i] = b[i] - L[i, :i] @ u[:i]
    return u


def backward_unit_t_np(L, v):
    m = v.shape[0]
    x = np.empty(m)
    for i in range(m - 1, -1, -1):
        x[i] = v[i] - L[i + 1:, i] @ x[i + 1:]
    return x


numpy_kernels = SimpleNamespace(
    name="numpy",
    sym_accumulate=sym_accumulate_np,
    ldl_factor=ldl_factor_np,
    rank1_pass=rank1_pass_np,
    cov_ldl_passes=cov_ldl_passes_np,
    forward_unit=forward_unit_np,
    backward_unit_t=backward_unit_t_np,
)

# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------


def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def sym_accumulate(M, K, sign):
        m, k = K.shape
        out = M.copy()
        for i in range(m):
            for j in range(i + 1):
                s = 0.0
                for t in range(k):
                    s += K[i, t] * K[j, t]
                v = out[i, j] + sign * s
                out[i, j] = v
                out[j, i] = v
        return out

    @njit(cache=True)
    def ldl_factor(S, L, D, tol):
        m = S.shape[0]
        v = np.empty(m)
        for j in range(m):
            dj = S[j, j]
            for t in range(j):
                v[t] = L[j, t] * D[t]
                dj -= L[j, t] * v[t]
            if not dj > tol:
                return j
            D[j] = dj
            for i in range(j + 1, m):
                s = S[i, j]
                for t in range(j):
                    s -= L[i, t] * v[t]
                L[i, j] = s / dj
        return -1

    @njit(cache=True)
    def rank1_pass(L, D, w, alpha):
        m = D.shape[0]
        for i in range(m):
            wi = w[i]
            wi2 = wi * wi
            d_old = D[i]
            d_new = d_old + wi2 / alpha
            if not d_new > 0.0:
                return i
            gamma = wi / (alpha * d_old + wi2)
            D[i] = d_new
            alpha = alpha + wi2 / d_old
            for p in range(i + 1, m):
                w[p] -= wi * L[p, i]
                L[p, i] += gamma * w[p]
        return -1

    @njit(cache=True)
    def cov_ldl_passes(L, D, Y, z, phi):
        m, k = Y.shape
        w = np.empty(m)
        for j in range(k):
            for i in range(m):
                w[i] = Y[i, j] - z[i]
            status = rank1_pass(L, D, w, phi)
            if status >= 0:
                return j * m + status
        return -1

    @njit(cache=True)
    def forward_unit(L, b):
        m = b.shape[0]
        u = np.empty(m)
        for i in range(m):
            s = b[i]
            for t in range(i):
                s -= L[i, t] * u[t]
            u[i] = s
        return u

    @njit(cache=True)
    def backward_unit_t(L, v):
        m = v.shape[0]
        x = np.empty(m)
        for i in range(m - 1, -1, -1):
            s = v[i]
            for t in range(i + 1, m):
                s -= L[t, i] * x[t]
            x[i] = s
        return x

    return SimpleNamespace(
        name="numba",
        sym_accumulate=sym_accumulate,
        ldl_factor=ldl_factor,
        rank1_pass=rank1_pass,
        cov_ldl_passes=cov_ldl_passes,
        forward_unit=forward_unit,
        backward_unit_t=backward_unit_t,
    )


def _numba_disabled():
    return os.environ.get("COVSTREAM_DISABLE_NUMBA", "").strip().lower() in {
        "1", "true", "yes", "on",
    }


try:
    numba_kernels = _build_numba_kernels()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_kernels = None

HAS_NUMBA = numba_kernels is not None

if HAS_NUMBA and not _numba_disabled():
    active = numba_kernels
else:
    active = numpy_kernels


def available():
    """Kernel sets usable in this process, numba first when present."""
    return [ks for ks in (numba_kernels, numpy_kernels) if ks is not None]


def by_name(name):
    for ks in available():
        if ks.name == name:
            return ks
    raise KeyError(f"kernel backend {name!r} is not available")
