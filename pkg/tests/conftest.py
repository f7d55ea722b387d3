import numpy as np
import pytest

from phshape.experiment import string_discretization
from phshape.model import string_plant


@pytest.fixture(scope="session")
def string():
    return string_plant()


@pytest.fixture(scope="session")
def plant50():
    return string_discretization(50)


@pytest.fixture
def rng():
    return np.random.default_rng(20231)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
