import numpy as np
import pytest

from covstream import _kernels

_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record and assert one acceptance criterion."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        request.config.stash[_CRITERIA].append(line)
        print(line)
        assert passed, line

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[ks.name for ks in _kernels.available()])
def kernels(request):
    return _kernels.by_name(request.param)


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.linalg.norm(b)
    diff = np.linalg.norm(a - b)
    return diff / scale if scale > 0 else diff
