import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_consensus.delays import four_agent_model, uniform
from delayed_consensus.dynamics import DynamicsError, column_spread, init_history, simulate, step
from delayed_consensus.graph import path
from delayed_consensus.io import random_row_stochastic
from delayed_consensus.spectral import predict_nonuniform

from conftest import random_connected_model

# randomly generated initial priority matrix from the four-robot experiment
EXPERIMENT_W0 = np.array([
    [0.1000, 0.4189, 0.0587, 0.4224],
    [0.3513, 0.2000, 0.0548, 0.3939],
    [0.2165, 0.2407, 0.3000, 0.2427],
    [0.2205, 0.2451, 0.0344, 0.5000],
])


def test_init_history_prefill():
    h = init_history(EXPERIMENT_W0, four_agent_model())
    assert len(h.frames) == 8 and h.k == 0
    assert all(np.array_equal(F, EXPERIMENT_W0) for F in h.frames)
    assert len(init_history([[0], [1]], uniform(path(2), 1)).frames) == 2


@pytest.mark.parametrize("W0", [np.zeros((3, 4)), [[np.nan], [0], [0], [0]]])
def test_init_history_rejects(W0):
    with pytest.raises(DynamicsError):
        init_history(W0, four_agent_model())


def test_step_hand_values():
    # W(k+1) = 0.9 W(k) + 0.1 H W(k-1), with W(-1) = W(0):
    # w1(1) = 0.9*0 + 0.1*1 = 0.1,    w1(2) = 0.9*0.1 + 0.1*w2(0) = 0.19
    dm = uniform(path(2), 1)
    h = step(init_history([[0.0], [1.0]], dm), dm, 0.1)
    np.testing.assert_allclose(h.current.ravel(), [0.1, 0.9], atol=1e-15)
    h = step(h, dm, 0.1)
    np.testing.assert_allclose(h.current.ravel(), [0.19, 0.81], atol=1e-15)
    assert h.k == 2


def test_step_fixed_point_and_zero_gain():
    dm = four_agent_model()
    W = np.tile([0.1, 0.2, 0.3, 0.4], (4, 1))
    h = init_history(W, dm)
    np.testing.assert_allclose(step(h, dm, 0.3).current, W, rtol=0, atol=1e-15)
    h = init_history(EXPERIMENT_W0, dm)
    np.testing.assert_array_equal(step(h, dm, 0.0).current, EXPERIMENT_W0)


def test_step_depth_mismatch():
    h = init_history([[0.0], [1.0]], uniform(path(2), 1))
    with pytest.raises(DynamicsError):
        step(h, uniform(path(2), 2), 0.1)


def test_column_spread():
    assert not column_spread(np.ones((3, 3))).any()
    assert column_spread([[0], [1]]).tolist() == [1.0]
    assert column_spread(EXPERIMENT_W0)[0] == pytest.approx(0.3513 - 0.1000, abs=1e-15)


def test_simulate_two_agents():
    traj, rep = simulate([[0.0], [1.0]], uniform(path(2), 1), 0.1, tol=1e-4)
    assert rep.converged and not rep.diverged
    assert rep.consensus_vector[0] == pytest.approx(0.5, abs=1e-12)
    spreads = traj.spreads()
    assert np.all(spreads >= 0)
    k = rep.convergence_step
    assert spreads[k - 1].max() >= 1e-4 and np.all(spreads[k:].max(axis=1) < 1e-4)


def test_simulate_four_agent_matches_closed_form():
    dm = four_agent_model()
    W0 = random_row_stochastic(4, seed=3)
    _, rep = simulate(W0, dm, 0.25, tol=1e-4)
    assert rep.converged
    np.testing.assert_allclose(rep.consensus_vector, predict_nonuniform(dm, 0.25, W0).alpha, atol=1e-6)


def test_simulate_four_agent_diverges_at_059():
    _, rep = simulate(random_row_stochastic(4, seed=3), four_agent_model(), 0.59)
    assert rep.diverged and not rep.converged and rep.convergence_step is None


def test_simulate_stride_and_monotone_snapshots():
    traj, rep = simulate(EXPERIMENT_W0, four_agent_model(), 0.1, stride=10)
    steps = [k for k, _ in traj.snapshots]
    assert steps == sorted(set(steps)) and steps[-1] == rep.steps_run
    assert all(k % 10 == 0 for k in steps[:-1])


def test_simulate_argument_checks():
    with pytest.raises(DynamicsError):
        simulate([[0.0], [1.0]], uniform(path(2), 1), 0.1, blowup=1.0)


def test_simulate_non_finite_reported_as_divergence():
    _, rep = simulate([[0.0], [1.0]], uniform(path(2), 1), 1e200, blowup=1e300)
    assert rep.diverged and rep.non_finite


def test_determinism():
    W0 = random_row_stochastic(4, seed=11)
    t1, r1 = simulate(W0, four_agent_model(), 0.2)
    t2, r2 = simulate(W0, four_agent_model(), 0.2)
    assert r1.convergence_step == r2.convergence_step
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(t1.snapshots, t2.snapshots))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_consensus_bounds_and_row_sums(seed):
    rng = np.random.default_rng(seed)
    dm = random_connected_model(rng, n_max=6, tau_hi=4)
    W0 = random_row_stochastic(dm.n, seed)
    c = 0.2 / (dm.tau_max * dm.graph.degrees.max())  # well inside the stable region
    _, rep = simulate(W0, dm, c)
    assert rep.converged
    alpha = rep.consensus_vector
    assert np.all(alpha >= W0.min(axis=0) - 1e-9) and np.all(alpha <= W0.max(axis=0) + 1e-9)
    assert alpha.sum() == pytest.approx(1.0, abs=1e-9)
