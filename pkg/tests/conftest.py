import numpy as np
import pytest

from streamsbm.sbm import SbmParams, generate, graph_from_edges


def min_flip_error(truth, est):
    e = float(np.mean(np.asarray(truth) != np.asarray(est)))
    return min(e, 1 - e)


@pytest.fixture
def path4():
    return graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture(scope="session")
def planted_2000():
    """p=1, q=0, two equal clusters on 2000 nodes."""
    return generate(SbmParams.from_probabilities(2000, 2, 1.0, 0.0), 0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
