import numpy as np
import pytest

from sheaflap.hypercore import Hypergraph


@pytest.fixture
def H3():
    return Hypergraph(3, [[0, 1, 2]])


@pytest.fixture
def x3():
    return np.array([0.0, 1.0, 5.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one status line per acceptance criterion, shown in the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
