"""Sliding-window covariance engine.

Each slide evicts the oldest ``step_remove`` observations, appends the
incoming ones and applies a single mixed update/downdate to the running
statistics (and to the LDL factors with the ``ldl`` backend). A cheap
probabilistic drift check and optional periodic refactorization keep
round-off from accumulating without bound.
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from covstream.core import CovarianceState, LdlState, data_matrix, from_columns
from covstream.errors import DimensionMismatch, LostDefiniteness
from covstream.ldl import ldl_factor, ldl_mixed_modify, ldl_state, mahalanobis_sq
from covstream.moments import mixed_update_downdate

DEFAULT_SPOT_CHECK_EVERY = 16


@dataclass(frozen=True)
class WindowConfig:
    width: int
    step_add: int = 1
    step_remove: int = 1
    backend: Literal["covariance_only", "ldl"] = "ldl"
    refactor_every: int = 0
    drift_tol: float = 1e-8
    # None: ceil(refactor_every / 4), or DEFAULT_SPOT_CHECK_EVERY when
    # periodic refactorization is off. 0 disables spot checks.
    spot_check_every: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.width < 2:
            raise ValueError("window width must be at least 2")
        if not self.drift_tol > 0:
            raise ValueError("drift_tol must be positive")
        if self.backend not in ("covariance_only", "ldl"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.refactor_every < 0 or self.step_add < 0 or self.step_remove < 0:
            raise ValueError("step sizes and refactor_every must be non-negative")

    @property
    def spot_interval(self):
        if self.spot_check_every is not None:
            return self.spot_check_every
        if self.refactor_every > 0:
            return max(1, math.ceil(self.refactor_every / 4))
        return DEFAULT_SPOT_CHECK_EVERY


class RingBuffer:
    """FIFO of observation columns backed by a growable (m, capacity) array."""

    def __init__(self, initial):
        m, n = initial.shape
        self._data = np.empty((m, max(2 * n, 4)))
        self._data[:, :n] = initial
        self._head = 0
        self._size = n

    def __len__(self):
        return self._size

    def _idx(self, start, count):
        return (self._head + start + np.arange(count)) % self._data.shape[1]

    def oldest(self, k):
        return self._data[:, self._idx(0, k)]

    def pop_oldest(self, k):
        cols = self.oldest(k)
        self._head = (self._head + k) % self._data.shape[1]
        self._size -= k
        return cols

    def push(self, cols):
        k = cols.shape[1]
        if self._size + k > self._data.shape[1]:
            self._data = np.concatenate(
                [self.contents(), np.empty((self._data.shape[0], self._size + 2 * k))],
                axis=1,
            )
            self._head = 0
        self._data[:, self._idx(self._size, k)] = cols
        self._size += k

    def contents(self):
        return self._data[:, self._idx(0, self._size)]


@dataclass
class WindowReport:
    steps: int = 0
    refactors: int = 0
    scheduled_refactors: int = 0
    drift_refactors: int = 0
    definiteness_recoveries: int = 0
    spot_checks: int = 0


@dataclass
class WindowState:
    config: WindowConfig
    buffer: RingBuffer
    stats: CovarianceState
    factors: Optional[LdlState]
    steps_since_refactor: int = 0
    report: WindowReport = field(default_factory=WindowReport)
    rng: np.random.Generator = None

    @property
    def contents(self):
        return self.buffer.contents()


def window_init(config: WindowConfig, initial) -> WindowState:
    X = data_matrix(initial)
    if X.shape[1] != config.width:
        raise DimensionMismatch(
            f"initial window has {X.shape[1]} columns, width is {config.width}"
        )
    stats = from_columns(X)
    factors = ldl_state(stats) if config.backend == "ldl" else None
    return WindowState(
        config, RingBuffer(X), stats, factors,
        rng=np.random.default_rng(config.seed),
    )


def _refactor(state):
    state.stats = from_columns(state.buffer.contents())
    if state.config.backend == "ldl":
        state.factors = ldl_state(state.stats)
    state.steps_since_refactor = 0
    state.report.refactors += 1


def _spot_check(state):
    """Compare one random scatter entry (and factor entry) against the buffer."""
    X = state.buffer.contents()
    m, n = X.shape
    i, j = sorted(state.rng.integers(0, m, size=2))[::-1]
    xi, xj = X[i], X[j]
    exact = math.fsum((xi - math.fsum(xi) / n) * (xj - math.fsum(xj) / n))
    scale = max(np.linalg.norm(state.stats.scatter), np.finfo(float).tiny)
    if abs(state.stats.scatter[i, j] - exact) > state.config.drift_tol * scale:
        return False
    f = state.factors
    if f is not None:
        entry = float(np.sum(f.L[i, : j + 1] * f.D[: j + 1] * f.L[j, : j + 1]))
        if abs(entry * (n - 1) - exact) > state.config.drift_tol * scale:
            return False
    return True


def window_slide(state: WindowState, incoming) -> WindowState:
    """Advance the window by one step. Mutates and returns ``state``."""
    cfg = state.config
    m = state.stats.dim
    Yu = data_matrix(incoming, rows=m)
    if Yu.shape[1] != cfg.step_add:
        raise DimensionMismatch(
            f"expected {cfg.step_add} incoming columns, got {Yu.shape[1]}"
        )
    if len(state.buffer) < cfg.step_remove:
        raise DimensionMismatch("window holds fewer columns than step_remove")

    Yd = state.buffer.pop_oldest(cfg.step_remove)
    state.buffer.push(Yu)
    state.stats = mixed_update_downdate(state.stats, Yu, Yd)
    state.steps_since_refactor += 1
    state.report.steps += 1

    if state.factors is not None:
        try:
            state.factors = ldl_mixed_modify(state.factors, Yu, Yd)
        except LostDefiniteness:
            state.report.definiteness_recoveries += 1
            _refactor(state)
            return state

    if cfg.refactor_every and state.steps_since_refactor >= cfg.refactor_every:
        state.report.scheduled_refactors += 1
        _refactor(state)
        return state

    interval = cfg.spot_interval
    if interval and state.report.steps % interval == 0:
        state.report.spot_checks += 1
        if not _spot_check(state):
            state.report.drift_refactors += 1
            _refactor(state)
    return state


def window_score(state: WindowState, v) -> float:
    """Squared Mahalanobis distance of ``v`` from the current window."""
    if state.factors is None:
        L, D = ldl_factor(state.stats.scatter / (state.stats.count - 1))
        return mahalanobis_sq(LdlState(state.stats.count, state.stats.mean, L, D), v)
    return mahalanobis_sq(state.factors, v)
