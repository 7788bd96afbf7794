import numpy as np
import pytest

from qpsl.core import Potential
from qpsl.spectrum import dirichlet_data, forward_data


def cos2pi(x):
    return np.cos(2 * np.pi * x)


def parabola(x):
    return x * (1 - x)


@pytest.fixture(scope="session")
def zero_data():
    """Forward data of (q = 0, a = 2, h = 0), N = 64."""
    return forward_data(Potential.constant(0.0), 2.0, 0.0, 64)


@pytest.fixture(scope="session")
def one_data():
    """Forward data of (q = 1, a = 2, h = 1), N = 64."""
    return forward_data(Potential.constant(1.0), 2.0, 1.0, 64)


@pytest.fixture(scope="session")
def cos_dirichlet():
    return dirichlet_data(Potential.from_function(cos2pi), 64)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a criterion outcome: call with (number, passed, detail)."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.pluginmanager.get_plugin("terminalreporter").write_line(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
