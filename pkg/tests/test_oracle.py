import numpy as np
import pytest

from pbadvice import oracle
from pbadvice.envs import GridConfig, GridState, grid_observe
from pbadvice.mdp import ValidationError, make_rng
from pbadvice.shaping import LOOK_AHEAD, PBRS


def bandit(rewards, gamma=0.5):
    """One live state with one arm per reward; every arm ends the episode."""
    k = len(rewards)
    T = np.zeros((2, k, 2))
    T[0, :, 1] = 1.0
    T[1, :, 1] = 1.0
    R = np.zeros((2, k))
    R[0] = rewards
    return oracle.TabularMDP(T, R, np.array([False, True]), gamma)


def test_mdp_validation():
    T = np.full((2, 1, 2), 0.4)
    with pytest.raises(ValidationError):
        oracle.TabularMDP(T, np.zeros((2, 1)), np.zeros(2, bool), 0.9)
    T = np.full((2, 1, 2), 0.5)
    with pytest.raises(ValidationError):
        oracle.TabularMDP(T, np.zeros((2, 1)), np.zeros(2, bool), 1.0)


def test_policy_rows_must_be_distributions():
    mdp = oracle.random_mdp(make_rng(0), 3, 2)
    with pytest.raises(ValidationError):
        oracle.policy_evaluation(mdp, np.full((3, 2), 0.7))


def test_zero_potential_is_identity():
    rng = make_rng(1)
    mdp = oracle.random_mdp(rng)
    pi = oracle.random_policy(rng, 5, 3)
    Q = oracle.policy_evaluation(mdp, pi)
    Qs = oracle.policy_evaluation(mdp, pi, LOOK_AHEAD, phi_sa=np.zeros((5, 3)))
    np.testing.assert_array_equal(Q, Qs)


def test_advice_shifts_q_by_potential():
    rng = make_rng(2)
    for _ in range(20):
        mdp = oracle.random_mdp(rng)
        pi = oracle.random_policy(rng, 5, 3)
        phi = rng.uniform(-3, 3, (5, 3))
        gap = oracle.policy_evaluation(mdp, pi) - oracle.policy_evaluation(mdp, pi, LOOK_AHEAD, phi_sa=phi)
        assert np.abs(gap - phi).max() <= 1e-6


def test_state_potential_shifts_v_by_potential():
    rng = make_rng(3)
    mdp = oracle.random_mdp(rng)
    pi = oracle.random_policy(rng, 5, 3)
    phi = rng.uniform(-3, 3, 5)
    V = (pi * oracle.policy_evaluation(mdp, pi)).sum(1)
    Vs = (pi * oracle.policy_evaluation(mdp, pi, PBRS, phi_s=phi)).sum(1)
    np.testing.assert_allclose(V - Vs, phi, atol=1e-8)


def test_value_iteration_zero_reward():
    mdp = oracle.random_mdp(make_rng(4))
    mdp = oracle.TabularMDP(mdp.T, np.zeros_like(mdp.R), mdp.terminal, mdp.gamma)
    Q, pol = oracle.value_iteration(mdp)
    assert not Q.any()
    np.testing.assert_array_equal(pol, 0)


def test_advice_greedy_policy_recovered():
    rng = make_rng(5)
    for _ in range(30):
        mdp = oracle.random_mdp(rng)
        phi = rng.uniform(-3, 3, (5, 3))
        _, pol = oracle.value_iteration(mdp)
        _, pol_s = oracle.value_iteration(mdp, LOOK_AHEAD, phi_sa=phi)
        np.testing.assert_array_equal(pol, pol_s)


def test_soft_fixed_point_examples():
    T = np.ones((1, 1, 1))
    mdp = oracle.TabularMDP(T, np.ones((1, 1)), np.zeros(1, bool), 0.5)
    assert oracle.soft_q_fixed_point(mdp)[0, 0] == pytest.approx(2.0, abs=1e-9)
    # symmetric two-action chain: both actions identical, so the soft policy is uniform
    T = np.zeros((2, 2, 2))
    T[0, :, 1] = T[1, :, 0] = 1.0
    mdp = oracle.TabularMDP(T, np.array([[1.0, 1.0], [0.5, 0.5]]), np.zeros(2, bool), 0.9)
    Q = oracle.soft_q_fixed_point(mdp)
    np.testing.assert_allclose(oracle.softmax_policy(Q), 0.5, atol=1e-12)


def test_soft_fixed_point_is_a_fixed_point():
    mdp = oracle.random_mdp(make_rng(6), 4, 2)
    Q = oracle.soft_q_fixed_point(mdp)
    m = Q.max(1)
    V = m + np.log(np.exp(Q - m[:, None]).sum(1))
    assert np.abs(mdp.R + mdp.gamma * mdp.T @ V - Q).max() <= 1e-9


def test_policy_gradient_matches_finite_differences():
    rng = make_rng(7)
    h = 1e-6
    for _ in range(10):
        mdp = oracle.random_mdp(rng, 3, 2)
        theta = rng.normal(size=(3, 2))
        grad = oracle.exact_policy_gradient(mdp, theta)
        fd = np.zeros_like(theta)
        for idx in np.ndindex(theta.shape):
            tp, tm = theta.copy(), theta.copy()
            tp[idx] += h
            tm[idx] -= h
            fd[idx] = (oracle.policy_objective(mdp, oracle.softmax_policy(tp))
                       - oracle.policy_objective(mdp, oracle.softmax_policy(tm))) / (2 * h)
        np.testing.assert_allclose(grad, fd, atol=1e-5)


def test_policy_gradient_bandit_cases():
    equal = bandit([1.0, 1.0])
    assert np.abs(oracle.exact_policy_gradient(equal, np.zeros((2, 2)))).max() <= 1e-14
    skew = bandit([1.0, 0.0])
    small = np.abs(oracle.exact_policy_gradient(skew, np.array([[20.0, -20.0], [0, 0]]))).max()
    assert small < 1e-12


def test_gridworld_export():
    cfg = GridConfig(p_jump=0.2)
    mdp = oracle.export_gridworld_as_tabular(cfg, 0.95)
    assert mdp.T.shape == (99, 5, 99)
    np.testing.assert_allclose(mdp.T.sum(-1), 1.0, atol=1e-12)
    o, o3 = grid_observe(GridState(4, 1)), grid_observe(GridState(4, 3))
    assert mdp.T[o, 4, o3] == pytest.approx(0.2)
    assert mdp.T[o, 4, o] == pytest.approx(0.8)
    g = grid_observe(cfg.goal)
    assert mdp.terminal[g] and np.all(mdp.T[g, :, g] == 1.0) and not mdp.R[g].any()
    assert mdp.rho0[grid_observe(cfg.start)] == 1.0
