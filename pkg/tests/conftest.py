import numpy as np
import pytest

from featmatch.fixtures import make_textured


@pytest.fixture(scope="session")
def textured():
    return make_textured(512, 512, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
