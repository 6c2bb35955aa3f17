import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from frackorn import Ball, Box, FracParams, QuadratureConfig  # noqa: E402

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


@pytest.fixture
def disc():
    return Ball((0.0, 0.0), 1.0)


@pytest.fixture
def square():
    return Box((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def interval():
    return Box((0.0,), (1.0,))


@pytest.fixture
def rotation():
    return ROTATION.copy()


@pytest.fixture
def sub():
    return FracParams(0.25, 2.0)


@pytest.fixture
def sup():
    return FracParams(0.75, 2.0)


@pytest.fixture
def quick():
    return QuadratureConfig(samples=20_000, seed=7, shards=4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
