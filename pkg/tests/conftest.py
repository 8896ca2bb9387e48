import numpy as np
import pytest

from zrpfluid import validate_rates
from helpers import ACCEPTANCE_LINES


@pytest.fixture
def example_w():
    """Birth-death chain 0 <-> 1 <-> 2 with r(0,1)=2, r(1,0)=1, r(1,2)=1, r(2,1)=2."""
    return validate_rates([[0, 2, 0], [1, 0, 1], [0, 2, 0]])


@pytest.fixture
def two_site():
    return validate_rates([[0, 1], [1, 0]])


@pytest.fixture
def cycle3():
    """Totally asymmetric cycle 0 -> 1 -> 2 -> 0 with unit rates."""
    return validate_rates([[0, 1, 0], [0, 0, 1], [1, 0, 0]])


@pytest.fixture
def complete3():
    return validate_rates(np.ones((3, 3)) - np.eye(3))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
