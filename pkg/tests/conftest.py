import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from outwave.grid_core import RadialField, RadialGrid, StatePair

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def grid():
    return RadialGrid(16.0, 2049)


def gaussian(grid, c, w, a=1.0):
    return RadialField(grid, a * np.exp(-((grid.r - c) / w) ** 2))


@pytest.fixture
def bump_pair(grid):
    return StatePair(gaussian(grid, 3.5, 0.4), gaussian(grid, 4.0, 0.5, -0.3))
