import numpy as np
import pytest

from delayed_consensus.delays import delay_model
from delayed_consensus.graph import from_edges

ACCEPTANCE_LINES = []


def random_connected_model(rng, n_max=6, tau_hi=6, n_min=2):
    """Random spanning tree plus extra edges, with random symmetric delays in 1..tau_hi."""
    n = int(rng.integers(n_min, n_max + 1))
    order = rng.permutation(n) + 1
    edges = {tuple(sorted((int(order[k]), int(order[rng.integers(0, k)])))) for k in range(1, n)}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < 0.3:
                edges.add((i, j))
    g = from_edges(n, edges)
    tau = np.zeros((n, n), dtype=int)
    for i, j in edges:
        tau[i - 1, j - 1] = tau[j - 1, i - 1] = rng.integers(1, tau_hi + 1)
    return delay_model(g, tau)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
