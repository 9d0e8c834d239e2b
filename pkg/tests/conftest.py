import numpy as np
import pytest

from bmjet.jet_geometry import GeometryConfig, JetPoint
from bmjet.sampling import random_points


def make_cfg(n, sigma="0", h11="1", K=1.0):
    return GeometryConfig.from_sources(n, sigma, h11, K)


def point(y, x=None, t=0.0):
    y = np.asarray(y, dtype=float)
    return JetPoint(t, np.zeros(y.size) if x is None else x, y)


@pytest.fixture
def sample_points():
    def _make(n, count=10, seed=0):
        return random_points(n, count, seed)

    return _make


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
