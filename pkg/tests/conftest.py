import numpy as np
import pytest

from shapeflow.mesh import triangulate
from shapeflow.shapes import circle


def angles(n):
    return 2 * np.pi * np.arange(n) / n


@pytest.fixture(scope="session")
def disk128():
    c = circle(1.0, 128)
    return c, triangulate(c, 0.1)


@pytest.fixture(scope="session")
def disk256_fine():
    c = circle(1.0, 256)
    return c, triangulate(c, 0.05)


@pytest.fixture(scope="session")
def disk128_fine():
    c = circle(1.0, 128)
    return c, triangulate(c, 0.05)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
