import functools

import numpy as np
import pytest

from tribaker.quantum import open_map
from tribaker.repeller import PhaseSpace
from tribaker.spectral import decompose
from tribaker.torus import PhaseGrid


@functools.lru_cache(maxsize=None)
def resonances(N, R, ordering="UP"):
    return decompose(open_map(N, R, ordering))


@functools.lru_cache(maxsize=None)
def phase_space(N, n):
    return PhaseSpace(N, PhaseGrid.square(n))


def torus_distance(a, b):
    dq = abs(a[0] - b[0]) % 1.0
    dp = abs(a[1] - b[1]) % 1.0
    return np.hypot(min(dq, 1 - dq), min(dp, 1 - dp))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
