"""Acceptance criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also collected into an "acceptance criteria" section of the
terminal summary.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from covstream import _kernels, moments
from covstream.bench import speedup
from covstream.core import from_columns, reconstruct
from covstream.counting import (
    OpCounter,
    count_report,
    counted_cov_modify,
    counted_ldl_factor,
    counted_ldl_modify,
)
from covstream.ldl import (
    ldl_factor,
    ldl_mixed_modify,
    ldl_rank_k_modify,
    ldl_state,
    rank1_modify,
)
from covstream.oracle import oracle_covariance
from covstream.verify import case_params, run_verify
from covstream.window import WindowConfig, window_init, window_slide

from conftest import rel_err

SEED = 7
CASES = 200


@pytest.fixture(scope="module")
def verify_run():
    t0 = time.perf_counter()
    checks = run_verify(seed=SEED, cases=CASES)
    return checks, time.perf_counter() - t0


def worst(checks, prefixes, suffix):
    vals = [c.value for c in checks
            if c.name.startswith(prefixes) and c.name.endswith(suffix)]
    return max(vals), len(vals)


def test_criterion_1_oracle_equivalence(verify_run, criterion):
    checks, seconds = verify_run
    ops = ("update.", "downdate.", "asymmetric.", "mixed.", "mixed_two_mean.")
    scatter, n_s = worst(checks, ops, ".scatter")
    mean, n_m = worst(checks, ops, ".mean")
    cases = {c.case for c in checks}
    ok = scatter <= 1e-10 and mean <= 1e-12 and len(cases) == CASES and seconds < 30
    criterion(1, "oracle equivalence", ok,
              f"{len(cases)} cases, worst scatter {scatter:.2e} over {n_s}, "
              f"worst mean {mean:.2e} over {n_m}, {seconds:.1f}s")


def test_criterion_2_invariance(criterion):
    worst_k = worst_root = 0.0
    for case in range(CASES):
        rng = np.random.default_rng([SEED, 1000 + case])
        m, n, k = case_params(case)
        X = rng.uniform(-1, 1, (m, n))
        Y = rng.uniform(-1, 1, (m, k))
        Yu = rng.uniform(-1, 1, (m, int(rng.integers(0, k + 2))))
        state = from_columns(X)
        ref = moments.make_k_update(state, Y, "minus", "prior_mean").matrix
        for branch in ("plus", "minus"):
            for form in ("prior_mean", "posterior_mean"):
                K = moments.make_k_update(state, Y, branch, form).matrix
                worst_k = max(worst_k, rel_err(K @ K.T, ref @ ref.T))
        Km = moments.make_k_downdate(state, X[:, :k], "minus").matrix
        Kp = moments.make_k_downdate(state, X[:, :k], "plus").matrix
        worst_k = max(worst_k, rel_err(Kp @ Kp.T, Km @ Km.T))
        a = moments.mixed_update_downdate(state, Yu, X[:, :k], "minus")
        b = moments.mixed_update_downdate(state, Yu, X[:, :k], "plus")
        worst_root = max(worst_root, rel_err(b.scatter, a.scatter))
    ok = worst_k <= 1e-11 and worst_root <= 1e-11
    criterion(2, "branch/root/form invariance", ok,
              f"worst KK^T {worst_k:.2e}, worst root {worst_root:.2e}")


def test_criterion_3_ldl_maintenance(criterion):
    rng = np.random.default_rng(SEED)
    worst_L = worst_D = 0.0
    for case in range(100):
        m = (1, 2, 5, 10, 20)[case % 5]
        n = int(rng.integers(m + 8, 6 * m + 40))
        k = int(rng.integers(1, min(10, n - m - 3) + 1))
        X = rng.uniform(-1, 1, (m, n))
        Y = rng.uniform(-1, 1, (m, k))
        Yu = rng.uniform(-1, 1, (m, int(rng.integers(0, k + 2))))
        ls = ldl_state(from_columns(X))
        for got, cols in (
            (ldl_rank_k_modify(ls, Y, 1), np.hstack([X, Y])),
            (ldl_rank_k_modify(ls, X[:, :k], -1), X[:, k:]),
            (ldl_mixed_modify(ls, Yu, X[:, :k]), np.hstack([X[:, k:], Yu])),
        ):
            L, D = ldl_factor(oracle_covariance(cols).covariance)
            worst_L = max(worst_L, float(np.max(np.abs(got.L - L))))
            worst_D = max(worst_D, float(np.max(np.abs(got.D - D) / D)))

    # sign gate: running the passes on y + z instead of y - z
    X = rng.uniform(-1, 1, (5, 40))
    Y = rng.uniform(-1, 1, (5, 3))
    ls = ldl_state(from_columns(X))
    truth = oracle_covariance(np.hstack([X, Y])).covariance
    n = ls.count
    ybar = Y.mean(axis=1)
    z = ybar - math.sqrt(n / (n + 3)) * (ybar - ls.mean)
    L, D = ls.L.copy(), ls.D * (n - 1)
    _kernels.active.cov_ldl_passes(L, D, np.ascontiguousarray(Y), -z, 1.0)
    plus_err = rel_err(reconstruct(L, D / (n + 2)), truth)
    good = ldl_rank_k_modify(ls, Y, 1)
    minus_err = rel_err(reconstruct(good.L, good.D), truth)

    ok = worst_L <= 1e-9 and worst_D <= 1e-9 and minus_err <= 1e-12 and plus_err > 1e-3
    criterion(3, "LDL maintenance", ok,
              f"100 cases, worst L {worst_L:.2e}, worst D {worst_D:.2e}; "
              f"y - z error {minus_err:.1e}, y + z error {plus_err:.1e}")


def test_criterion_4_round_trips(criterion):
    rng = np.random.default_rng(SEED + 4)
    cov_w = ldl_w = r1_w = 0.0
    for case in range(100):
        m = (1, 2, 5, 20)[case % 4]
        n = int(rng.integers(m + 5, 200))
        k = int(rng.integers(1, 12))
        X = rng.uniform(-1, 1, (m, n))
        Y = rng.uniform(-1, 1, (m, k))
        state = from_columns(X)
        back = moments.downdate(moments.update(state, Y), Y)
        cov_w = max(cov_w, rel_err(back.scatter, state.scatter),
                    rel_err(back.mean, state.mean), abs(back.count - state.count))
        ls = ldl_state(state)
        lb = ldl_rank_k_modify(ldl_rank_k_modify(ls, Y, 1), Y, -1)
        ldl_w = max(ldl_w, float(np.max(np.abs(lb.L - ls.L))),
                    float(np.max(np.abs(lb.D - ls.D) / ls.D)), rel_err(lb.mean, ls.mean))
        w = Y[:, 0]
        L1, D1 = rank1_modify(ls.L, ls.D, w, 1)
        L2, D2 = rank1_modify(L1, D1, w, -1)
        r1_w = max(r1_w, float(np.max(np.abs(L2 - ls.L))), float(np.max(np.abs(D2 - ls.D))))
    ok = cov_w <= 1e-10 and ldl_w <= 1e-10 and r1_w <= 1e-11
    criterion(4, "round trips", ok,
              f"covariance {cov_w:.2e}, LDL {ldl_w:.2e}, rank-1 {r1_w:.2e}")


def _slope(ms, costs):
    return float(np.polyfit(np.log(ms), np.log(costs), 1)[0])


def test_criterion_5_complexity(criterion):
    ms = [16, 32, 64, 128, 256]
    k = 10
    rng = np.random.default_rng(SEED)
    cov_cost, ldl_cost, naive_cost = [], [], []
    sqrt_ok = True
    for m in ms:
        A = rng.standard_normal((m, m + 2))
        S1 = A @ A.T / (m + 1)
        mean = rng.standard_normal(m)
        Y = rng.standard_normal((m, k))
        c = OpCounter()
        counted_cov_modify(S1, mean, 1000, Y, 1, c)
        sqrt_ok &= c.sqrts == 1
        cov_cost.append(c.total)
        L, D = ldl_factor(S1)
        c = OpCounter()
        counted_ldl_modify(L, D, mean, 1000, Y, 1, c)
        ldl_cost.append(c.total)
        c = OpCounter()
        counted_ldl_factor(S1, c)
        naive_cost.append(c.total)
    n_indep = all(
        count_report(12, 100, 3, kind, naive=False).measured
        == count_report(12, 100_000, 3, kind, naive=False).measured
        for kind in ("update", "downdate", "ldl_update", "ldl_downdate")
    )
    s_cov, s_ldl, s_naive = _slope(ms, cov_cost), _slope(ms, ldl_cost), _slope(ms, naive_cost)
    ok = (sqrt_ok and n_indep and abs(s_cov - 2) <= 0.1 and abs(s_ldl - 2) <= 0.1
          and abs(s_naive - 3) <= 0.2)
    criterion(5, "complexity claims", ok,
              f"single sqrt {sqrt_ok}, n-independent {n_indep}, slopes: "
              f"update {s_cov:.3f}, LDL update {s_ldl:.3f}, naive LDL {s_naive:.3f}")


def test_criterion_6_speedup(criterion):
    t0 = time.perf_counter()
    r = speedup(100, 100_000, 10, seed=SEED)
    seconds = time.perf_counter() - t0
    ok = r["speedup"] >= 50 and seconds < 60
    criterion(6, "speedup", ok,
              f"{r['speedup']:.0f}x at m=100 n=1e5 k=10, "
              f"{r['incremental_s']:.2e}s vs {r['naive_s']:.2e}s, check took {seconds:.1f}s")


def test_criterion_7_window_drift(criterion):
    rng = np.random.default_rng(SEED)
    W, steps = 64, 1000
    stream = rng.uniform(-1, 1, (5, W + steps))
    cfg = WindowConfig(width=W, backend="ldl", refactor_every=0, spot_check_every=0)
    ws = window_init(cfg, stream[:, :W])
    for j in range(W, W + steps):
        window_slide(ws, stream[:, j:j + 1])
    o = oracle_covariance(ws.contents)
    err = rel_err(ws.stats.scatter, o.scatter)
    ferr = rel_err(ws.factors.reconstruct(), o.covariance)
    contents_ok = np.array_equal(ws.contents, stream[:, -W:])
    ok = err <= 1e-8 and ferr <= 1e-8 and contents_ok and ws.report.refactors == 0
    criterion(7, "window drift", ok,
              f"{steps} slides, scatter {err:.2e}, factors {ferr:.2e}, "
              f"refactors {ws.report.refactors}")


def test_criterion_8_verify_reproducible(criterion):
    cmd = [sys.executable, "-m", "covstream", "verify", "--seed", "7", "--cases", "200"]
    env = dict(os.environ, COVSTREAM_THREADS="4")
    runs = [subprocess.run(cmd, capture_output=True, text=True, env=env) for _ in range(2)]
    codes = [r.returncode for r in runs]
    same = runs[0].stdout == runs[1].stdout and runs[0].stdout != ""
    digest = runs[0].stdout.strip().rsplit("digest=", 1)[-1][:12]
    criterion(8, "verify reproducible", codes == [0, 0] and same,
              f"exit codes {codes}, identical output {same}, digest {digest}")
