import numpy as np
import pytest

from covstream.core import covariance, from_columns
from covstream.errors import DimensionMismatch, NotPositiveDefinite
from covstream.ldl import ldl_state, mahalanobis_sq
from covstream.oracle import oracle_covariance
from covstream.window import (
    RingBuffer,
    WindowConfig,
    window_init,
    window_score,
    window_slide,
)

from conftest import rel_err


def test_config_validation():
    with pytest.raises(ValueError):
        WindowConfig(width=1)
    with pytest.raises(ValueError):
        WindowConfig(width=4, drift_tol=0)
    with pytest.raises(ValueError):
        WindowConfig(width=4, backend="dense")
    assert WindowConfig(width=4, refactor_every=10).spot_interval == 3
    assert WindowConfig(width=4).spot_interval == 16
    assert WindowConfig(width=4, spot_check_every=0).spot_interval == 0


def test_ring_buffer_fifo():
    rb = RingBuffer(np.array([[1.0, 2.0, 3.0]]))
    rb.push(np.array([[4.0, 5.0, 6.0, 7.0]]))
    np.testing.assert_array_equal(rb.pop_oldest(2), [[1.0, 2.0]])
    rb.push(np.array([[8.0]]))
    np.testing.assert_array_equal(rb.contents(), [[3.0, 4.0, 5.0, 6.0, 7.0, 8.0]])
    assert len(rb) == 6


@pytest.mark.parametrize("backend", ["ldl", "covariance_only"])
def test_init_and_slide_example(backend):
    ws = window_init(WindowConfig(width=4, backend=backend), [[1.0, 2.0, 3.0, 4.0]])
    assert covariance(ws.stats)[0, 0] == pytest.approx(5 / 3)
    window_slide(ws, [[5.0]])
    np.testing.assert_array_equal(ws.contents, [[2.0, 3.0, 4.0, 5.0]])
    assert covariance(ws.stats)[0, 0] == pytest.approx(5 / 3, rel=1e-14)
    assert ws.stats.mean[0] == pytest.approx(3.5)
    if backend == "ldl":
        assert ws.factors.D[0] == pytest.approx(5 / 3, rel=1e-14)


def test_constant_window():
    X = np.full((2, 5), 3.0)
    ws = window_init(WindowConfig(width=5, backend="covariance_only"), X)
    np.testing.assert_array_equal(ws.stats.scatter, np.zeros((2, 2)))
    with pytest.raises(NotPositiveDefinite):
        window_init(WindowConfig(width=5, backend="ldl"), X)


def test_init_width_mismatch():
    with pytest.raises(DimensionMismatch):
        window_init(WindowConfig(width=3), [[1.0, 2.0]])


def test_slide_same_column(rng):
    X = rng.uniform(-1, 1, (3, 10))
    ws = window_init(WindowConfig(width=10), X)
    before = ws.stats
    window_slide(ws, X[:, :1])
    assert rel_err(ws.stats.scatter, before.scatter) <= 1e-11
    window_slide(ws, X[:, 1:2])
    assert rel_err(ws.stats.scatter, before.scatter) <= 1e-11


def test_slide_rejects_wrong_step(rng):
    ws = window_init(WindowConfig(width=4), rng.uniform(-1, 1, (2, 4)))
    with pytest.raises(DimensionMismatch):
        window_slide(ws, rng.uniform(-1, 1, (2, 2)))


def test_full_replacement(rng):
    W = 20
    stream = rng.uniform(-1, 1, (4, 2 * W))
    ws = window_init(WindowConfig(width=W, spot_check_every=0), stream[:, :W])
    for j in range(W, 2 * W):
        window_slide(ws, stream[:, j:j + 1])
    ref = from_columns(stream[:, W:])
    assert rel_err(ws.stats.scatter, ref.scatter) <= 1e-8
    assert rel_err(covariance(ws.stats), ws.factors.reconstruct()) <= 1e-9


def test_multi_column_steps(rng):
    cfg = WindowConfig(width=12, step_add=3, step_remove=2)
    stream = rng.uniform(-1, 1, (3, 40))
    ws = window_init(cfg, stream[:, :12])
    pos = 12
    for _ in range(6):
        window_slide(ws, stream[:, pos:pos + 3])
        pos += 3
    assert ws.stats.count == 12 + 6
    o = oracle_covariance(ws.contents)
    assert rel_err(ws.stats.scatter, o.scatter) <= 1e-10
    np.testing.assert_array_equal(ws.contents, stream[:, pos - 18:pos])


def test_refactor_every_one_is_tight(rng):
    stream = rng.uniform(-1, 1, (3, 80))
    ws = window_init(WindowConfig(width=16, refactor_every=1), stream[:, :16])
    for j in range(16, 80):
        window_slide(ws, stream[:, j:j + 1])
        o = oracle_covariance(ws.contents)
        assert rel_err(ws.stats.scatter, o.scatter) <= 1e-12
    assert ws.report.scheduled_refactors == 64


def test_definiteness_recovery(rng, monkeypatch):
    import covstream.window as window
    from covstream.errors import LostDefiniteness

    stream = rng.uniform(-1, 1, (3, 30))
    ws = window_init(WindowConfig(width=10), stream[:, :10])
    ref = window_init(WindowConfig(width=10, refactor_every=1), stream[:, :10])
    real = window.ldl_mixed_modify
    calls = []

    def flaky(*args, **kw):
        calls.append(1)
        if len(calls) == 5:
            raise LostDefiniteness("injected")
        return real(*args, **kw)

    monkeypatch.setattr(window, "ldl_mixed_modify", flaky)
    for j in range(10, 30):
        window_slide(ws, stream[:, j:j + 1])
        window_slide(ref, stream[:, j:j + 1])
    assert ws.report.definiteness_recoveries == 1
    assert rel_err(ws.stats.scatter, ref.stats.scatter) <= 1e-8
    assert rel_err(ws.factors.reconstruct(), ref.factors.reconstruct()) <= 1e-8


def test_score_matches_mahalanobis(rng):
    X = rng.uniform(-1, 1, (3, 30))
    v = rng.uniform(-1, 1, 3)
    expected = mahalanobis_sq(ldl_state(from_columns(X)), v)
    for backend in ("ldl", "covariance_only"):
        ws = window_init(WindowConfig(width=30, backend=backend), X)
        assert window_score(ws, v) == pytest.approx(expected, rel=1e-12)
        assert window_score(ws, ws.stats.mean) == pytest.approx(0.0, abs=1e-20)


def test_spot_check_catches_corruption(rng):
    X = rng.uniform(-1, 1, (1, 10))
    ws = window_init(WindowConfig(width=10, spot_check_every=1), X)
    ws.stats = type(ws.stats)(ws.stats.count, ws.stats.mean, ws.stats.scatter * 2)
    window_slide(ws, rng.uniform(-1, 1, (1, 1)))
    assert ws.report.drift_refactors == 1
    o = oracle_covariance(ws.contents)
    assert rel_err(ws.stats.scatter, o.scatter) <= 1e-13
