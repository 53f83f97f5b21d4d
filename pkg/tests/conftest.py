import math

import pytest

from squeezedbath.reservoir import ReservoirParams

# the reference parameter point used across the suite
HEADLINE = ReservoirParams(lam=10.0, omega0=10.0, r=0.2, theta=math.pi / 4)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def headline():
    return HEADLINE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
