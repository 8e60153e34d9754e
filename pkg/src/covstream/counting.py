"""Operation counting through an instrumented scalar type.

:class:`Counted` wraps a float and tallies every arithmetic operation it takes
part in on a shared :class:`OpCounter`. The ``counted_*`` functions are
scalar-loop transcriptions of the production algorithms written against that
type; they are only used for measuring, never on the production path.

Subtractions count as additions and divisions as multiplications.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OpCounter:
    mults: int = 0
    adds: int = 0
    sqrts: int = 0

    @property
    def total(self):
        return self.mults + self.adds

    def snapshot(self):
        return {"mults": self.mults, "adds": self.adds, "sqrts": self.sqrts}


class Counted:
    __slots__ = ("v", "c")

    def __init__(self, v, counter):
        self.v = float(v)
        self.c = counter

    def __repr__(self):
        return f"Counted({self.v!r})"

    def _add(self, a, b):
        self.c.adds += 1
        return Counted(a + b, self.c)

    def _mul(self, a):
        self.c.mults += 1
        return Counted(a, self.c)

    def __add__(self, o):
        return self._add(self.v, _v(o))

    __radd__ = __add__

    def __sub__(self, o):
        return self._add(self.v, -_v(o))

    def __rsub__(self, o):
        return self._add(_v(o), -self.v)

    def __mul__(self, o):
        return self._mul(self.v * _v(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._mul(self.v / _v(o))

    def __rtruediv__(self, o):
        return self._mul(_v(o) / self.v)

    def __neg__(self):
        return Counted(-self.v, self.c)

    def __float__(self):
        return self.v


def _v(x):
    return x.v if isinstance(x, Counted) else x


def csqrt(x):
    x.c.sqrts += 1
    return Counted(math.sqrt(x.v), x.c)


def _wrap(values, counter):
    return [Counted(v, counter) for v in values]


def _lower(M, counter):
    m = len(M)
    return [[Counted(M[i][j], counter) for j in range(i + 1)] for i in range(m)]


def _unwrap_lower(T):
    m = len(T)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            out[i, j] = out[j, i] = T[i][j].v
    return out


# ---------------------------------------------------------------------------
# covariance matrix
# ---------------------------------------------------------------------------


def counted_cov_modify(S1, mean, n, Y, phi, counter):
    """Rank-k update (phi=+1) or downdate (phi=-1) of a normalized covariance.

    Returns ``(S2, mean2)`` as float arrays.
    """
    Y = np.asarray(Y, dtype=np.float64)
    m, k = Y.shape
    N = Counted(n, counter)
    cols = [_wrap(Y[:, j], counter) for j in range(k)]
    x1 = _wrap(mean, counter)

    sums = []
    for i in range(m):
        s = cols[0][i]
        for j in range(1, k):
            s = s + cols[j][i]
        sums.append(s)
    ybar = [s / k for s in sums]

    n2 = N + phi * k
    c = csqrt(N / n2)
    z = [ybar[i] - c * (ybar[i] - x1[i]) for i in range(m)]
    K = [[cols[j][i] - z[i] for j in range(k)] for i in range(m)]

    T = _lower(S1, counter)
    scale = N - 1
    for i in range(m):
        for j in range(i + 1):
            acc = T[i][j] * scale
            for t in range(k):
                prod = K[i][t] * K[j][t]
                acc = acc + prod if phi > 0 else acc - prod
            T[i][j] = acc
    inv = 1 / (n2 - 1)
    for i in range(m):
        for j in range(i + 1):
            T[i][j] = T[i][j] * inv

    if phi > 0:
        mean2 = [(N * x1[i] + sums[i]) / n2 for i in range(m)]
    else:
        mean2 = [(N * x1[i] - sums[i]) / n2 for i in range(m)]
    return _unwrap_lower(T), np.array([v.v for v in mean2])


def counted_naive_covariance(X, counter):
    """Two-pass covariance of the full column set."""
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    rows = [_wrap(X[i], counter) for i in range(m)]
    mean = []
    for i in range(m):
        s = rows[i][0]
        for j in range(1, n):
            s = s + rows[i][j]
        mean.append(s / n)
    C = [[rows[i][j] - mean[i] for j in range(n)] for i in range(m)]
    T = []
    for i in range(m):
        row = []
        for j in range(i + 1):
            acc = C[i][0] * C[j][0]
            for t in range(1, n):
                acc = acc + C[i][t] * C[j][t]
            row.append(acc)
        T.append(row)
    inv = 1 / (Counted(n, counter) - 1)
    for i in range(m):
        for j in range(i + 1):
            T[i][j] = T[i][j] * inv
    return _unwrap_lower(T), np.array([v.v for v in mean])


# ---------------------------------------------------------------------------
# LDL
# ---------------------------------------------------------------------------


def counted_ldl_modify(L, D, mean, n, Y, phi, counter):
    """Covariance-aware rank-k LDL update/downdate, counted end to end."""
    Y = np.asarray(Y, dtype=np.float64)
    m, k = Y.shape
    N = Counted(n, counter)
    Lc = [[Counted(L[i][j], counter) for j in range(m)] for i in range(m)]
    Dc = _wrap(D, counter)
    x1 = _wrap(mean, counter)
    cols = [_wrap(Y[:, j], counter) for j in range(k)]

    scale = N - 1
    Dc = [d * scale for d in Dc]
    n2 = N + phi * k
    c = csqrt(N / n2)
    ybar = []
    for i in range(m):
        s = cols[0][i]
        for j in range(1, k):
            s = s + cols[j][i]
        ybar.append(s / k)
    z = [ybar[i] - c * (ybar[i] - x1[i]) for i in range(m)]

    for j in range(k):
        alpha = phi
        w = [cols[j][i] - z[i] for i in range(m)]
        for i in range(m):
            wi2 = w[i] * w[i]
            d_old = Dc[i]
            gamma = w[i] / (alpha * d_old + wi2)
            Dc[i] = d_old + wi2 / alpha
            alpha = alpha + wi2 / d_old
            for p in range(i + 1, m):
                w[p] = w[p] - w[i] * Lc[p][i]
                Lc[p][i] = Lc[p][i] + gamma * w[p]
    inv = 1 / (n2 - 1)
    Dc = [d * inv for d in Dc]
    L2 = np.array([[v.v for v in row] for row in Lc])
    return L2, np.array([d.v for d in Dc])


def counted_ldl_factor(S, counter):
    """Plain LDL^T factorization of an m x m matrix from scratch."""
    S = np.asarray(S, dtype=np.float64)
    m = S.shape[0]
    A = [[Counted(S[i, j], counter) for j in range(i + 1)] for i in range(m)]
    L = [[None] * m for _ in range(m)]
    D = [None] * m
    for j in range(m):
        v = [L[j][t] * D[t] for t in range(j)]
        dj = A[j][j]
        for t in range(j):
            dj = dj - L[j][t] * v[t]
        D[j] = dj
        for i in range(j + 1, m):
            s = A[i][j]
            for t in range(j):
                s = s - L[i][t] * v[t]
            L[i][j] = s / dj
    Lf = np.eye(m)
    for i in range(m):
        for j in range(i):
            Lf[i, j] = L[i][j].v
    return Lf, np.array([d.v for d in D])


# ---------------------------------------------------------------------------
# reference formulas and the report
# ---------------------------------------------------------------------------


def formula_cov_incremental(m, k):
    return {
        "mults": ((k + 2) * m * m + (k + 6) * m + 2) / 2,
        "adds": (k * m * m + (5 * k + 2) * m + 6) / 2,
        "sqrts": 1,
        "total": (k + 1) * m * m + (3 * k + 4) * m + 4,
    }


def formula_cov_naive(m, n, k, phi):
    nk = n + phi * k
    return {
        "mults": ((nk + 1) * m * m + (nk + 5) * m) / 2,
        "adds": ((nk - 1) * m * m + (3 * n + (2 + 3 * phi) * k - 1) * m + 2) / 2,
        "sqrts": 0,
        "total": nk * m * m + (2 * n + (1 + 2 * phi) * k + 2) * m + 3,
    }


def formula_ldl_incremental(m, k):
    return {
        "mults": k * m * m + (4 * k + 4) * m + 1,
        "adds": k * m * m + (4 * k + 1) * m + 1,
        "sqrts": 1,
        # headline total; the separate mult/add counts above sum to 2 less
        "total": 2 * k * m * m + (8 * k + 5) * m + 4,
    }


def formula_ldl_naive(m):
    # cost of refactoring the m x m covariance from scratch
    return {"total": m ** 3 / 3}


@dataclass
class CountRecord:
    op_kind: str
    m: int
    n: int
    k: int
    measured: dict
    formula: dict
    naive_measured: dict = field(default_factory=dict)
    naive_formula: dict = field(default_factory=dict)

    @property
    def measured_total(self):
        return self.measured["mults"] + self.measured["adds"]

    def deltas(self):
        d = {
            key: self.measured[key] - self.formula[key]
            for key in ("mults", "adds", "sqrts")
        }
        d["total"] = self.measured_total - self.formula["total"]
        return d

    def exact(self):
        return all(v == 0 for v in self.deltas().values())

    def lines(self):
        out = [f"{self.op_kind}: m={self.m} n={self.n} k={self.k}"]
        for key in ("mults", "adds", "sqrts"):
            if key in self.formula:
                d = self.measured[key] - self.formula[key]
                flag = "exact" if d == 0 else f"delta {d:+g}"
                out.append(
                    f"  incremental {key:5s} measured {self.measured[key]:>12d}"
                    f"  formula {self.formula[key]:>14g}  {flag}"
                )
        total = self.measured["mults"] + self.measured["adds"]
        d = total - self.formula["total"]
        flag = "exact" if d == 0 else f"delta {d:+g}"
        out.append(
            f"  incremental total measured {total:>12d}"
            f"  formula {self.formula['total']:>14g}  {flag}"
        )
        if self.naive_measured:
            nm = self.naive_measured
            out.append(
                f"  naive measured mults {nm['mults']} adds {nm['adds']} "
                f"total {nm['mults'] + nm['adds']}"
            )
        elif self.naive_formula:
            out.append("  naive measured: skipped (too large to instrument)")
        for key, val in self.naive_formula.items():
            out.append(f"  naive formula {key} {val:g}")
        return out


NAIVE_COUNT_LIMIT = 2_000_000


def _random_problem(m, n, k, phi, rng):
    S = rng.standard_normal((m, m + 2))
    S1 = S @ S.T / (m + 1)
    mean = rng.standard_normal(m)
    Y = rng.standard_normal((m, k))
    return S1, mean, Y


def count_report(m, n, k, op_kind, seed=0, naive=True) -> CountRecord:
    """Measured operation counts of one incremental step beside the closed forms.

    ``op_kind`` is one of ``update``, ``downdate``, ``ldl_update`` and
    ``ldl_downdate``. The incremental measurement never touches the n prior
    observations, so it runs at any n; the naive recomputation is instrumented
    only when it stays below ``NAIVE_COUNT_LIMIT`` scalar products.
    """
    phi = {"update": 1, "downdate": -1, "ldl_update": 1, "ldl_downdate": -1}[op_kind]
    rng = np.random.default_rng(seed)
    S1, mean, Y = _random_problem(m, n, k, phi, rng)
    counter = OpCounter()
    nk = n + phi * k
    do_naive = naive and nk * m * m <= NAIVE_COUNT_LIMIT
    naive_counter = OpCounter()

    if op_kind in ("update", "downdate"):
        counted_cov_modify(S1, mean, n, Y, phi, counter)
        formula = formula_cov_incremental(m, k)
        naive_formula = formula_cov_naive(m, n, k, phi)
        if do_naive:
            counted_naive_covariance(rng.standard_normal((m, nk)), naive_counter)
    else:
        L, D = np.linalg.cholesky(S1), None
        d = np.diag(L).copy()
        L = L / d
        D = d * d
        counted_ldl_modify(L, D, mean, n, Y, phi, counter)
        formula = formula_ldl_incremental(m, k)
        naive_formula = formula_ldl_naive(m)
        if do_naive:
            counted_ldl_factor(S1, naive_counter)
    return CountRecord(
        op_kind, m, n, k, counter.snapshot(), formula,
        naive_counter.snapshot() if do_naive else {}, naive_formula,
    )
