import math

import numpy as np
import pytest

from pbadvice.actor_critic import (ACConfig, DivergenceError, TabularCritic, TabularSoftmaxPolicy,
                                   ac_pba_episode, grad_log_softmax, run_ac_car, run_ac_gridworld,
                                   score_zero_mean_check, softmax_probs)
from pbadvice.approximator import Adam, GaussianMlpPolicy
from pbadvice.envs import CarConfig, PuddleJumpGrid
from pbadvice.harness.checks import gaussian_score_mean, lookahead_trace_gap
from pbadvice.mdp import Environment, StepOutcome, ValidationError, make_rng
from pbadvice.shaping import LOOK_AHEAD, LOOK_BACK, NONE, PBRS, PotentialScheme, grid_scheme


class OneStep(Environment):
    """Single-state task that ends after one action with reward ``r``."""

    discrete = True
    observation_count = 1
    action_count = 5
    max_steps = 1

    def __init__(self, r=2.0):
        self.r = r

    def reset(self, rng=None):
        return 0

    def step(self, action, rng=None):
        return StepOutcome(0, self.r, True)


class Recorder:
    """Wraps a policy and keeps every actor update."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def sample(self, obs, rng):
        return self.inner.sample(obs, rng)

    def actor_step(self, obs, a, coeff):
        self.calls.append((obs, a, coeff))
        self.inner.actor_step(obs, a, coeff)


def test_softmax_examples():
    theta = np.zeros((1, 5))
    np.testing.assert_allclose(softmax_probs(theta, 0), 0.2)
    row = np.array([[math.log(2), 0, 0, 0, 0]])
    np.testing.assert_allclose(softmax_probs(row, 0), [2 / 6, 1 / 6, 1 / 6, 1 / 6, 1 / 6], atol=1e-15)
    np.testing.assert_allclose(softmax_probs(row + 9.0, 0), softmax_probs(row, 0), atol=1e-15)


def test_grad_log_softmax_examples():
    np.testing.assert_allclose(grad_log_softmax(np.zeros((1, 5)), 0, 0), [0.8, -0.2, -0.2, -0.2, -0.2])
    rng = make_rng(0)
    theta = rng.normal(size=(3, 4))
    h = 1e-6
    for a in range(4):
        g = grad_log_softmax(theta, 1, a)
        fd = np.empty(4)
        for j in range(4):
            tp, tm = theta.copy(), theta.copy()
            tp[1, j] += h
            tm[1, j] -= h
            fd[j] = (math.log(softmax_probs(tp, 1)[a]) - math.log(softmax_probs(tm, 1)[a])) / (2 * h)
        np.testing.assert_allclose(g, fd, atol=1e-6)


def test_score_zero_mean_tabular():
    rng = make_rng(1)
    for _ in range(100):
        theta = rng.normal(scale=4, size=(2, 5))
        assert score_zero_mean_check(theta, 1) <= 1e-12
    spread = np.array([[0.0, 30.0, -30.0, 5.0, 1.0]])
    assert score_zero_mean_check(spread, 0) <= 1e-12


def test_score_times_state_function_is_zero():
    rng = make_rng(2)
    theta = rng.normal(size=(1, 5))
    p = softmax_probs(theta, 0)
    f = 17.3
    total = sum(p[a] * f * grad_log_softmax(theta, 0, a) for a in range(5))
    assert np.abs(total).max() <= 1e-12


def test_score_zero_mean_gaussian_within_clt_bound():
    policy = GaussianMlpPolicy((4,), make_rng(3), Adam(1e-3), [-1.0, -1.0], [1.0, 1.0])
    policy.net.params[:] = 0.0  # mean 0, log-std 0
    n = 10 ** 6
    norm = score_zero_mean_check(policy, np.zeros(2), n, make_rng(4))
    # per-component std of the score is 1 (mean part) and sqrt(2) (log-std part)
    assert norm <= 4 / math.sqrt(n) * math.sqrt(1 + 2)
    est, se = gaussian_score_mean(n)
    assert np.all(np.abs(est) <= 3 * se)


def test_one_step_look_back_hand_trace():
    phi = 1.5
    cfg = ACConfig(scheme=PotentialScheme(LOOK_BACK, phi_sa=lambda s, a: phi), alpha_theta=0.2, gamma=1.0)
    policy = TabularSoftmaxPolicy(1, 5, cfg.alpha_theta)
    critic = TabularCritic(1, cfg.alpha_omega)
    trace = []
    ac_pba_episode(OneStep(2.0), policy, critic, cfg, make_rng(5), trace)
    (st,) = trace
    assert st.delta == 2.0 + phi
    assert st.actor_coeff == st.delta
    expect = np.zeros(5) - 0.2 * 3.5 * 0.2
    expect[st.a] = 0.2 * 3.5 * 0.8
    np.testing.assert_allclose(policy.theta[0], expect, atol=1e-15)
    assert critic.omega[0] == pytest.approx(0.001 * 3.5)


def test_printed_critic_sign_moves_value_away():
    cfg = ACConfig(printed_critic_sign=True)
    critic = TabularCritic(1, cfg.alpha_omega)
    ac_pba_episode(OneStep(2.0), TabularSoftmaxPolicy(1, 5, 0.2), critic, cfg, make_rng(6))
    assert critic.omega[0] < 0


def test_unshaped_matches_reference_a2c():
    env = PuddleJumpGrid()
    cfg = ACConfig(scheme=PotentialScheme(NONE), theta_bound=3.0)
    policy = TabularSoftmaxPolicy(99, 5, cfg.alpha_theta, theta_bound=3.0)
    critic = TabularCritic(99, cfg.alpha_omega)
    ac_pba_episode(env, policy, critic, cfg, make_rng(7, "ref"))

    # reference vanilla A2C written out directly, consuming the same stream
    rng = make_rng(7, "ref")
    theta, omega = np.zeros((99, 5)), np.zeros(99)

    def draw(s):
        p = softmax_probs(theta, s)
        return int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), 4))

    s = env.reset(rng)
    a = draw(s)
    for _ in range(env.max_steps):
        s2, r, done = env.step(a, rng)
        delta = r + 0.0 + 1.0 * (0.0 if done else omega[s2]) - omega[s]
        theta[s] = np.clip(theta[s] + 0.2 * (delta * grad_log_softmax(theta, s, a)), -3, 3)
        omega[s] += 0.001 * delta
        if done:
            break
        s = s2
        a = draw(s)
    np.testing.assert_array_equal(policy.theta, theta)
    np.testing.assert_array_equal(critic.omega, omega)


def test_look_ahead_reuses_sampled_action():
    env = PuddleJumpGrid()
    cfg = ACConfig(scheme=grid_scheme(LOOK_AHEAD), theta_bound=3.0)
    policy = Recorder(TabularSoftmaxPolicy(99, 5, cfg.alpha_theta, theta_bound=3.0))
    critic = TabularCritic(99, cfg.alpha_omega)
    trace = []
    ac_pba_episode(env, policy, critic, cfg, make_rng(8), trace)
    for prev, nxt in zip(trace, trace[1:]):
        assert cfg.scheme.phi_sa(nxt.obs, nxt.a) == prev.phi_next


def test_look_ahead_algebra_exact():
    assert lookahead_trace_gap(grid_episodes=3, car_episodes=1) <= 1e-12


def test_look_ahead_with_constant_potential_lockstep():
    # with gamma=1 and a constant potential the look-ahead TD error equals the
    # vanilla one, and the actor coefficient adds back exactly c
    c = 2.5
    env = PuddleJumpGrid()
    la = ACConfig(scheme=PotentialScheme(LOOK_AHEAD, phi_sa=lambda s, a: c))
    trace = []
    ac_pba_episode(env, TabularSoftmaxPolicy(99, 5, 0.2, theta_bound=3.0), TabularCritic(99, 0.001),
                   la, make_rng(9), trace)
    for st in trace[:-1]:
        vanilla = st.r + st.bootstrap - st.v_s
        assert st.delta == pytest.approx(vanilla, abs=1e-12)
        assert st.actor_coeff == pytest.approx(vanilla + c, abs=1e-12)


def test_divergence_is_reported():
    class Nan(OneStep):
        def step(self, action, rng=None):
            return StepOutcome(0, float("inf"), True)

    with pytest.raises(DivergenceError):
        ac_pba_episode(Nan(), TabularSoftmaxPolicy(1, 5, 0.2), TabularCritic(1, 0.1), ACConfig(), make_rng(0))


def test_config_validation():
    with pytest.raises(ValidationError):
        ACConfig(alpha_theta=0.0)
    with pytest.raises(ValidationError):
        ACConfig(gamma=1.5)


def test_gridworld_runs():
    assert run_ac_gridworld(ACConfig(T_max=0), 0) == []
    cfg = ACConfig(scheme=grid_scheme(LOOK_BACK), T_max=5, theta_bound=3.0)
    recs = run_ac_gridworld(cfg, 0)
    assert [r.episode for r in recs] == list(range(5))
    assert all(r.steps <= 1000 and r.scheme == LOOK_BACK for r in recs)
    assert recs == run_ac_gridworld(cfg, 0)


def test_unshaped_gridworld_converges_within_200_episodes():
    recs = run_ac_gridworld(ACConfig(T_max=200, theta_bound=3.0), 0)
    assert np.mean([r.success for r in recs[-20:]]) >= 0.9


def test_car_run_clamps_and_reports():
    cfg = ACConfig(scheme=PotentialScheme(PBRS, phi_s=lambda s: float(s[0]) + 2.0), alpha_theta=1e-5,
                   alpha_omega=5.6e-4, gamma=0.99, T_max=1)
    recs, converged = run_ac_car(cfg, 0, CarConfig(max_steps=50), hidden=(8,), eval_rollouts=2)
    assert len(recs) == 1 and recs[0].steps <= 50
    assert isinstance(converged, bool)
