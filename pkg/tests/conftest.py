import numpy as np
import pytest

from fdelab.model import validate_params
from fdelab.mesh import build_graded_radial


@pytest.fixture
def p3():
    return validate_params(3, 0.2, 1.0)


@pytest.fixture
def mesh256():
    return build_graded_radial(1e-4, 1.0, 256, 1.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])
