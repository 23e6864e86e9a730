import numpy as np
import pytest

from hgdiff import build_hypergraph


@pytest.fixture
def small_hypergraph():
    # node 5 is isolated, hyperedge 3 is a singleton
    return build_hypergraph([[0, 1, 2], [2, 3], [1, 3, 4], [4]], 6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
