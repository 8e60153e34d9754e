"""Seeded oracle property suite behind ``covstream verify``.

Every case draws a random column set and an edit, runs the incremental
operations and compares them with :mod:`covstream.oracle`. Results are
collected in case order, so the printed digest is reproducible for a given
seed regardless of how many worker threads ran the cases.
"""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from covstream import moments
from covstream.core import from_columns, reconstruct
from covstream.ldl import (
    ldl_factor,
    ldl_mixed_modify,
    ldl_rank_k_modify,
    ldl_state,
    rank1_modify,
    solve,
)
from covstream.oracle import oracle_covariance
from covstream.window import WindowConfig, window_init, window_slide

DIMS = (1, 2, 5, 20)
COUNTS = (3, 10, 100, 1000)

TOL_SCATTER = 1e-10
TOL_MEAN = 1e-12
TOL_INVARIANT = 1e-11
TOL_ROUND_TRIP = 1e-10
TOL_RANK1 = 1e-11
TOL_LDL = 1e-9
TOL_SOLVE = 1e-9
TOL_WINDOW = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    case: int
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value <= self.tol)


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = np.linalg.norm(a - b)
    scale = np.linalg.norm(b)
    return float(diff / scale) if scale > 0 else float(diff)


def case_params(case):
    """Grid point for a case index: cycles through m, n and k choices."""
    m = DIMS[case % len(DIMS)]
    n = COUNTS[(case // len(DIMS)) % len(COUNTS)]
    kind = (case // (len(DIMS) * len(COUNTS))) % 3
    k = (1, 2, n // 2)[kind]
    return m, n, max(1, min(k, n - 1))


def thread_count():
    try:
        return max(1, int(os.environ.get("COVSTREAM_THREADS", "1")))
    except ValueError:
        return 1


def run_case(case, seed):
    rng = np.random.default_rng([seed, case])
    m, n, k = case_params(case)
    X = rng.uniform(-1.0, 1.0, (m, n))
    Y = rng.uniform(-1.0, 1.0, (m, k))
    out = []

    def add(name, value, tol):
        out.append(Check(name, case, value, tol))

    state = from_columns(X)
    o_up = oracle_covariance(np.hstack([X, Y]))
    o_dn = oracle_covariance(X[:, k:])
    removed = X[:, :k]

    up = moments.update(state, Y)
    add("update.scatter", rel_err(up.scatter, o_up.scatter), TOL_SCATTER)
    add("update.mean", rel_err(up.mean, o_up.mean), TOL_MEAN)
    dn = moments.downdate(state, removed)
    add("downdate.scatter", rel_err(dn.scatter, o_dn.scatter), TOL_SCATTER)
    add("downdate.mean", rel_err(dn.mean, o_dn.mean), TOL_MEAN)
    asym = moments.downdate_asymmetric(state, removed)
    add("asymmetric.scatter", rel_err(asym.scatter, o_dn.scatter), TOL_SCATTER)

    ku = int(rng.integers(0, k + 2))
    Yu = rng.uniform(-1.0, 1.0, (m, ku))
    o_mx = oracle_covariance(np.hstack([X[:, k:], Yu]))
    for root in ("minus", "plus"):
        mx = moments.mixed_update_downdate(state, Yu, removed, root=root)
        add(f"mixed.{root}.scatter", rel_err(mx.scatter, o_mx.scatter), TOL_SCATTER)
        add(f"mixed.{root}.mean", rel_err(mx.mean, o_mx.mean), TOL_MEAN)
    tm = moments.mixed_two_mean(state, Yu, removed)
    add("mixed_two_mean.scatter", rel_err(tm.scatter, o_mx.scatter), TOL_SCATTER)

    # invariances
    ref = moments.make_k_update(state, Y, "minus").matrix
    for branch, form in (("plus", "prior_mean"), ("minus", "posterior_mean"),
                         ("plus", "posterior_mean")):
        K = moments.make_k_update(state, Y, branch, form).matrix
        add(f"update.K.{branch}.{form}", rel_err(K @ K.T, ref @ ref.T), TOL_INVARIANT)
    Km = moments.make_k_downdate(state, removed, "minus").matrix
    Kp = moments.make_k_downdate(state, removed, "plus").matrix
    add("downdate.K.branch", rel_err(Kp @ Kp.T, Km @ Km.T), TOL_INVARIANT)

    back = moments.downdate(up, Y)
    add("roundtrip.scatter", rel_err(back.scatter, state.scatter), TOL_ROUND_TRIP)
    add("roundtrip.mean", rel_err(back.mean, state.mean), TOL_ROUND_TRIP)
    add("symmetry", float(np.max(np.abs(mx.scatter - mx.scatter.T))), 0.0)

    # LDL checks need a positive definite covariance before and after
    if n - k > m + 1:
        ls = ldl_state(state)
        for name, got, cols in (
            ("ldl.update", ldl_rank_k_modify(ls, Y, 1), np.hstack([X, Y])),
            ("ldl.downdate", ldl_rank_k_modify(ls, removed, -1), X[:, k:]),
            ("ldl.mixed", ldl_mixed_modify(ls, Yu, removed), np.hstack([X[:, k:], Yu])),
        ):
            L, D = ldl_factor(oracle_covariance(cols).covariance)
            add(f"{name}.L", float(np.max(np.abs(got.L - L))), TOL_LDL)
            add(f"{name}.D", float(np.max(np.abs(got.D - D) / np.abs(D))), TOL_LDL)
        w = Y[:, 0]
        L1, D1 = rank1_modify(ls.L, ls.D, w, 1)
        L2, D2 = rank1_modify(L1, D1, w, -1)
        add("rank1.roundtrip", float(max(np.max(np.abs(L2 - ls.L)),
                                         np.max(np.abs(D2 - ls.D)))), TOL_RANK1)
        b = rng.uniform(-1.0, 1.0, m)
        S = reconstruct(ls.L, ls.D)
        add("solve.residual", rel_err(S @ solve(ls, b), b), TOL_SOLVE)

    if case % 10 == 0:
        W = 16
        cfg = WindowConfig(width=W, backend="ldl", seed=case)
        stream = rng.uniform(-1.0, 1.0, (3, W + 40))
        ws = window_init(cfg, stream[:, :W])
        for j in range(W, stream.shape[1]):
            window_slide(ws, stream[:, j:j + 1])
        o = oracle_covariance(ws.contents)
        add("window.drift", rel_err(ws.stats.scatter, o.scatter), TOL_WINDOW)
    return out


def run_verify(seed=7, cases=200, threads=None):
    threads = threads or thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda c: run_case(c, seed), range(cases)))
    else:
        chunks = [run_case(c, seed) for c in range(cases)]
    return [chk for chunk in chunks for chk in chunk]


def digest(checks):
    h = hashlib.sha256()
    for c in checks:
        h.update(f"{c.name}|{c.case}|{c.value!r}\n".encode())
    return h.hexdigest()


def summarize(checks):
    """Worst value per check name, in first-seen order."""
    worst = {}
    for c in checks:
        prev = worst.get(c.name)
        if prev is None or c.value > prev.value:
            worst[c.name] = c
    return list(worst.values())
