import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_consensus.delays import (FOUR_AGENT_TAU, DelayError, delay_aggregates, delay_model,
                                      four_agent_model, lag_adjacency, uniform)
from delayed_consensus.graph import complete, cycle, path

from conftest import random_connected_model


def test_four_agent_model_valid():
    dm = four_agent_model()
    assert dm.tau_max == 7
    assert dm.tau.tolist() == FOUR_AGENT_TAU.tolist()


def test_p2_valid_and_asymmetric_rejected():
    assert delay_model(path(2), [[0, 1], [1, 0]]).tau_max == 1
    with pytest.raises(DelayError, match="asymmetric"):
        delay_model(path(2), [[0, 1], [2, 0]])


@pytest.mark.parametrize("tau,msg", [
    ([[1, 1], [1, 0]], "self-delay"),
    ([[0, 0], [0, 0]], "delay >= 1"),
    ([[0, 1, 2], [1, 0, 1], [2, 1, 0]], "non-edge"),
    ([[0, 1], [1, 0], [0, 0]], "must be"),
])
def test_validation_errors(tau, msg):
    g = path(2) if len(tau) == 2 else path(3)
    with pytest.raises(DelayError, match=msg):
        delay_model(g, tau)


def _ones(pairs, n=4):
    M = np.zeros((n, n), dtype=int)
    for i, j in pairs:
        M[i - 1, j - 1] = M[j - 1, i - 1] = 1
    return M


def test_lag_slices_four_agent():
    dm = four_agent_model()
    assert lag_adjacency(dm, 7).tolist() == _ones([(1, 2)]).tolist()
    assert lag_adjacency(dm, 5).tolist() == _ones([(1, 4), (2, 3), (2, 4)]).tolist()
    assert not lag_adjacency(dm, 2).any()
    with pytest.raises(DelayError):
        lag_adjacency(dm, 8)
    with pytest.raises(DelayError):
        lag_adjacency(dm, 0)


def test_aggregates_four_agent():
    # oracle: row sums and upper-triangle sum of the matrix, computed by hand
    agg = delay_aggregates(four_agent_model())
    assert agg.psi.tolist() == [7 + 1 + 5, 7 + 5 + 5, 1 + 5 + 6, 5 + 5 + 6] == [13, 17, 12, 16]
    assert agg.total_edge_delay == 7 + 1 + 5 + 5 + 5 + 6 == 29


def test_aggregates_trivial():
    agg = delay_aggregates(uniform(path(2), 1))
    assert agg.psi.tolist() == [1, 1] and agg.total_edge_delay == 1
    for d in (1, 4):
        agg = delay_aggregates(uniform(complete(4), d))
        assert agg.psi.tolist() == [3 * d] * 4 and agg.total_edge_delay == 6 * d


def test_uniform():
    dm = uniform(cycle(4), 3)
    assert dm.tau_max == 3
    assert np.array_equal(lag_adjacency(dm, 3), cycle(4).adjacency)
    assert not lag_adjacency(dm, 1).any() and not lag_adjacency(dm, 2).any()
    assert uniform(complete(4), 1).tau_max == 1
    with pytest.raises(DelayError):
        uniform(path(3), 0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_slices_and_aggregates_random(seed):
    rng = np.random.default_rng(seed)
    dm = random_connected_model(rng, n_max=10, tau_hi=9)
    total = sum(lag_adjacency(dm, m) for m in range(1, dm.tau_max + 1))
    assert np.array_equal(total, dm.graph.adjacency)
    agg = delay_aggregates(dm)
    assert agg.psi.sum() == 2 * agg.total_edge_delay


@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
@settings(max_examples=30, deadline=None)
def test_uniform_psi_is_scaled_degree(seed, d):
    g = random_connected_model(np.random.default_rng(seed)).graph
    assert np.array_equal(delay_aggregates(uniform(g, d)).psi, d * g.degrees)
