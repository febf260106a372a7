import numpy as np
import pytest

from orthant.data import Dataset, waterpumps


@pytest.fixture(scope="session")
def wp():
    return waterpumps()


@pytest.fixture(scope="session")
def exp100():
    rng = np.random.default_rng(20240601)
    return Dataset(rng.exponential(1.0, size=100))


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
