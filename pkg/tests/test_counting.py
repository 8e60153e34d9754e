import math

import numpy as np
import pytest

from covstream.counting import (
    Counted,
    OpCounter,
    count_report,
    counted_cov_modify,
    counted_ldl_factor,
    counted_ldl_modify,
    counted_naive_covariance,
    csqrt,
    formula_ldl_incremental,
)
from covstream.core import from_columns
from covstream.ldl import ldl_factor, ldl_rank_k_modify, ldl_state
from covstream.moments import downdate, update

from conftest import rel_err


def test_counted_scalar_tallies():
    c = OpCounter()
    a, b = Counted(3.0, c), Counted(4.0, c)
    r = csqrt(a * a + b * b)
    assert r.v == 5.0
    assert (c.mults, c.adds, c.sqrts) == (2, 1, 1)
    _ = (a - 1.0) / b + 2.0 * a - b
    assert (c.mults, c.adds) == (4, 4)
    assert c.total == 8


@pytest.mark.parametrize("phi", [1, -1])
def test_counted_cov_modify_matches_production(rng, phi):
    X = rng.uniform(-1, 1, (4, 12))
    Y = X[:, :3] if phi < 0 else rng.uniform(-1, 1, (4, 3))
    state = from_columns(X)
    S1 = state.scatter / (state.count - 1)
    S2, mean2 = counted_cov_modify(S1, state.mean, state.count, Y, phi, OpCounter())
    ref = update(state, Y) if phi > 0 else downdate(state, Y)
    assert rel_err(S2, ref.scatter / (ref.count - 1)) <= 1e-12
    assert rel_err(mean2, ref.mean) <= 1e-13


def test_counted_ldl_matches_production(rng):
    X = rng.uniform(-1, 1, (5, 20))
    Y = rng.uniform(-1, 1, (5, 2))
    ls = ldl_state(from_columns(X))
    L, D = counted_ldl_modify(ls.L, ls.D, ls.mean, ls.count, Y, 1, OpCounter())
    ref = ldl_rank_k_modify(ls, Y, 1)
    assert np.max(np.abs(L - ref.L)) <= 1e-12
    assert rel_err(D, ref.D) <= 1e-12
    S = from_columns(X).scatter / 19
    L2, D2 = counted_ldl_factor(S, OpCounter())
    Lr, Dr = ldl_factor(S)
    assert np.max(np.abs(L2 - Lr)) <= 1e-13


def test_naive_covariance_counted(rng):
    X = rng.uniform(-1, 1, (3, 8))
    S, mean = counted_naive_covariance(X, OpCounter())
    assert rel_err(S, np.cov(X)) <= 1e-13
    assert rel_err(mean, X.mean(axis=1)) <= 1e-14


@pytest.mark.parametrize("kind", ["update", "downdate", "ldl_update", "ldl_downdate"])
def test_single_sqrt_and_n_independent(kind):
    a = count_report(6, 100, 3, kind, naive=False)
    b = count_report(6, 100_000, 3, kind, naive=False)
    assert a.measured["sqrts"] == 1
    assert a.measured == b.measured


def test_headline_ldl_total_reported():
    rec = count_report(8, 50, 3, "ldl_update", naive=False)
    assert rec.formula["total"] == 620
    assert formula_ldl_incremental(8, 3)["mults"] + formula_ldl_incremental(8, 3)["adds"] == 618
    text = "\n".join(rec.lines())
    assert "formula" in text and ("exact" in text or "delta" in text)


def test_naive_measured_when_small():
    rec = count_report(4, 20, 2, "update")
    assert rec.naive_measured["mults"] > 0
    big = count_report(4, 10**6, 2, "update")
    assert big.naive_measured == {}
    assert "skipped" in "\n".join(big.lines())


def test_ldl_factor_count_is_cubic():
    counts = []
    for m in (8, 16, 32):
        c = OpCounter()
        counted_ldl_factor(np.eye(m) * 2.0, c)
        counts.append(c.total)
    slope = math.log(counts[2] / counts[1]) / math.log(2)
    assert 2.6 < slope < 3.2
