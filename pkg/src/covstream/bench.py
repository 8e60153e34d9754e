"""Timing harness: incremental steps against full recomputation, and the
numba kernels against their numpy fallbacks."""

import time

import numpy as np

from covstream import _kernels, moments
from covstream.core import from_columns
from covstream.ldl import ldl_factor, ldl_rank_k_modify, ldl_state


def best_time(fn, repeat=5, number=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def speedup(m, n, k, seed=0, repeat=5):
    """Time a rank-k covariance update against recomputing from all columns."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (m, n))
    Y = rng.uniform(-1.0, 1.0, (m, k))
    state = from_columns(X)
    full = np.hstack([X, Y])
    moments.update(state, Y)  # warm the kernels
    t_inc = best_time(lambda: moments.update(state, Y), repeat=repeat, number=20)
    t_naive = best_time(lambda: from_columns(full), repeat=repeat)
    return {"m": m, "n": n, "k": k, "incremental_s": t_inc,
            "naive_s": t_naive, "speedup": t_naive / t_inc}


def ldl_speedup(m, n, k, seed=0, repeat=5):
    """Rank-k LDL update against updating the covariance and refactoring."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (m, n))
    Y = rng.uniform(-1.0, 1.0, (m, k))
    state = from_columns(X)
    ls = ldl_state(state)
    ldl_rank_k_modify(ls, Y, 1)
    t_inc = best_time(lambda: ldl_rank_k_modify(ls, Y, 1), repeat=repeat, number=10)

    def rebuild():
        s2 = from_columns(np.hstack([X, Y]))
        ldl_factor(s2.scatter / (s2.count - 1))

    t_naive = best_time(rebuild, repeat=repeat)
    return {"m": m, "n": n, "k": k, "incremental_s": t_inc,
            "naive_s": t_naive, "speedup": t_naive / t_inc}


def backend_comparison(m, k, seed=0, repeat=5):
    """Per-kernel timings of every available backend on the same inputs."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (m, 4 * m + 10))
    Y = rng.uniform(-1.0, 1.0, (m, k))
    state = from_columns(X)
    S = state.scatter / (state.count - 1)
    rows = []
    for ks in _kernels.available():
        ls = ldl_state(state, ks)
        L, D = ls.L.copy(), ls.D * (state.count - 1)
        z = Y.mean(axis=1)
        b = rng.uniform(-1.0, 1.0, m)
        # one call each so numba compilation is not timed
        ldl_rank_k_modify(ls, Y, 1, ks)
        ks.sym_accumulate(state.scatter, Y, 1.0)
        ks.forward_unit(ls.L, b)
        cases = {
            "ldl_rank_k_modify": lambda: ldl_rank_k_modify(ls, Y, 1, ks),
            "ldl_factor": lambda: ldl_factor(S, ks),
            "sym_accumulate": lambda: ks.sym_accumulate(state.scatter, Y, 1.0),
            "cov_ldl_passes": lambda: ks.cov_ldl_passes(L.copy(), D.copy(), Y, z, 1.0),
            "forward_unit": lambda: ks.forward_unit(ls.L, b),
        }
        for name, fn in cases.items():
            rows.append({"backend": ks.name, "kernel": name, "m": m, "k": k,
                         "seconds": best_time(fn, repeat=repeat, number=5)})
    return rows
