"""Property suites: each measures a worst-case deviation and compares it to a tolerance.

The suites run at full size by default. ``quick=True`` shrinks the sample
counts for smoke tests; tolerances never change.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import oracle
from ..actor_critic import ACConfig, TabularSoftmaxPolicy, ac_pba_episode, make_gridworld_agent
from ..approximator import Adam, GaussianMlpPolicy, Mlp, MlpCritic, gaussian_log_prob_grads
from ..envs import CarConfig, GridConfig, MountainCar, PuddleJumpGrid
from ..mdp import Experience, make_rng
from ..shaping import LOOK_AHEAD, NONE, PBRS, PotentialScheme, car_scheme, grid_scheme, pbrs_bonus
from ..soft_q import SoftQConfig, learnability_experiment, sample_action, soft_policy, soft_q_update


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{flag}] {self.name}: {self.measured:.3e} vs tol {self.tolerance:.1e}{extra}"


def _result(name, measured, tol, detail="") -> CheckResult:
    measured = float(measured)
    return CheckResult(name, measured, tol, bool(measured <= tol), detail)


def check_learnability(quick: bool = False) -> list[CheckResult]:
    """PBRS soft Q-learner vs an unshaped learner started at ``Q0 + phi``."""
    env = PuddleJumpGrid(GridConfig())
    n_phi, n_seeds, steps = (2, 1, 2000) if quick else (5, 3, 10_000)
    rng = make_rng(0, "check-learnability")
    worst = 0.0
    for _ in range(n_phi):
        phi = rng.uniform(-10.0, 10.0, env.observation_count)
        for seed in range(n_seeds):
            Q0 = rng.uniform(-1.0, 1.0, (env.observation_count, env.action_count))
            worst = max(worst, learnability_experiment(env, phi, Q0, steps, seed))
    return [_result("learnability", worst, 1e-9, f"{n_phi} potentials x {n_seeds} seeds x {steps} updates")]


def check_advice_identity(quick: bool = False) -> list[CheckResult]:
    """Look-ahead advice shifts ``Q^pi`` by exactly ``phi(s, a)``."""
    rng = make_rng(0, "check-advice")
    n = 10 if quick else 100
    worst = 0.0
    for _ in range(n):
        mdp = oracle.random_mdp(rng, 5, 3, 0.9)
        pi = oracle.random_policy(rng, 5, 3)
        phi = rng.uniform(-5.0, 5.0, (5, 3))
        Q = oracle.policy_evaluation(mdp, pi, tol=1e-10)
        Qs = oracle.policy_evaluation(mdp, pi, LOOK_AHEAD, phi_sa=phi, tol=1e-10)
        worst = max(worst, np.abs(Q - Qs - phi).max())
    return [_result("advice_identity", worst, 1e-6, f"{n} random 5x3 MDPs")]


def check_telescoping(quick: bool = False) -> list[CheckResult]:
    """Discounted PBRS bonuses telescope, so every policy's objective shifts by the same constant."""
    rng = make_rng(0, "check-telescoping")
    n_traj = 100 if quick else 1000
    worst = 0.0
    for _ in range(n_traj):
        phi = rng.uniform(-10.0, 10.0, 20)
        scheme = PotentialScheme(PBRS, phi_s=lambda s, phi=phi: phi[s], terminal_potential_zero=False)
        gamma = float(rng.uniform(0.5, 1.0))
        states = rng.integers(20, size=int(rng.integers(2, 200)))
        total = sum(gamma ** t * pbrs_bonus(scheme, s, s2, False, gamma)
                    for t, (s, s2) in enumerate(zip(states[:-1], states[1:])))
        T = len(states) - 1
        worst = max(worst, abs(total - (gamma ** T * phi[states[-1]] - phi[states[0]])))
    out = [_result("telescoping", worst, 1e-9, f"{n_traj} trajectories")]

    n_mdp, n_pol = (5, 5) if quick else (50, 20)
    worst = 0.0
    for _ in range(n_mdp):
        mdp = oracle.random_mdp(rng, 5, 3, 0.9)
        phi = rng.uniform(-5.0, 5.0, 5)
        shift = mdp.rho0 @ phi
        for _ in range(n_pol):
            pi = oracle.random_policy(rng, 5, 3)
            J = oracle.policy_objective(mdp, pi)
            Js = oracle.policy_objective(mdp, pi, mode=PBRS, phi_s=phi)
            worst = max(worst, abs(Js - (J - shift)))
    out.append(_result("objective_shift", worst, 1e-8, f"{n_mdp} MDPs x {n_pol} policies"))
    return out


def check_greedy_invariance(quick: bool = False) -> list[CheckResult]:
    rng = make_rng(0, "check-greedy")
    n = 10 if quick else 100
    worst = 0.0
    mismatches = 0
    for _ in range(n):
        mdp = oracle.random_mdp(rng, 5, 3, 0.9)
        phi = rng.uniform(-5.0, 5.0, 5)
        Q, pol = oracle.value_iteration(mdp, tol=1e-12)
        Qs, pol_s = oracle.value_iteration(mdp, PBRS, phi_s=phi, tol=1e-12)
        mismatches += int(np.any(pol != pol_s))
        worst = max(worst, np.abs(Q - Qs - phi[:, None]).max())
    return [
        CheckResult("greedy_invariance", float(mismatches), 0.0, mismatches == 0,
                    f"states with differing greedy action over {n} MDPs"),
        _result("optimal_value_shift", worst, 1e-8),
    ]


def soft_fixed_point_gap(n_states: int = 4, n_actions: int = 2, gamma: float = 0.9,
                         max_updates: int = 2_000_000, tol: float = 1e-3, seed: int = 0) -> tuple[float, int]:
    """Sample-based soft Q-learning on a small deterministic MDP vs the exact fixed point.

    Each update starts from a uniformly drawn state (exploring starts) and
    takes an action from the current soft policy. Returns the sup-norm gap
    and the number of updates spent; stops early once the gap is below ``tol``.
    """
    rng = make_rng(seed, "soft-fixed-point")
    nxt = rng.integers(n_states, size=(n_states, n_actions))
    T = np.zeros((n_states, n_actions, n_states))
    T[np.arange(n_states)[:, None], np.arange(n_actions)[None, :], nxt] = 1.0
    mdp = oracle.TabularMDP(T, rng.uniform(-1.0, 1.0, (n_states, n_actions)),
                            np.zeros(n_states, dtype=bool), gamma)
    target = oracle.soft_q_fixed_point(mdp, tol=1e-13)
    cfg = SoftQConfig(gamma=gamma)
    plain = PotentialScheme(NONE)
    Q = cfg.initial_table(n_states, n_actions)
    gap = np.abs(Q - target).max()
    k = 0
    while k < max_updates:
        s = int(rng.integers(n_states))
        a = sample_action(soft_policy(Q, s), rng)
        soft_q_update(Q, Experience(s, a, float(mdp.R[s, a]), int(nxt[s, a])), plain, cfg.rate(k), gamma)
        k += 1
        if k % 1000 == 0:
            gap = np.abs(Q - target).max()
            if gap <= tol:
                break
    return float(np.abs(Q - target).max()), k


def check_soft_fixed_point(quick: bool = False) -> list[CheckResult]:
    gap, k = soft_fixed_point_gap(max_updates=200_000 if quick else 2_000_000)
    return [_result("soft_fixed_point", gap, 1e-3, f"{k} updates")]


def gaussian_score_mean(n_samples: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean of the Gaussian score (mean and log-std parts) and its standard errors."""
    rng = make_rng(seed, "check-score-gauss")
    mean, log_std = float(rng.normal()), float(rng.uniform(-2.0, 0.5))
    a = mean + math.exp(log_std) * rng.standard_normal(n_samples)
    g = np.stack(gaussian_log_prob_grads(mean, log_std, a))
    return g.mean(axis=1), g.std(axis=1, ddof=1) / math.sqrt(n_samples)


def check_score(quick: bool = False) -> list[CheckResult]:
    rng = make_rng(0, "check-score")
    n_rows = 100 if quick else 1000
    worst = 0.0
    for _ in range(n_rows):
        theta = rng.normal(scale=3.0, size=(1, int(rng.integers(2, 8))))
        policy = TabularSoftmaxPolicy(1, theta.shape[1], 1.0)
        policy.theta[:] = theta
        p = policy.probs(0)
        total = sum(p[a] * policy.grad_log_prob(0, a) for a in range(len(p)))
        worst = max(worst, np.abs(total).max())
    out = [_result("score_tabular", worst, 1e-12, f"{n_rows} random rows")]
    n = 10_000 if quick else 1_000_000
    est, se = gaussian_score_mean(n)
    z = float(np.max(np.abs(est) / se))
    out.append(_result("score_gaussian", z, 3.0, f"max |mean|/SE over mean and log-std parts, n={n}"))
    return out


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return float(np.linalg.norm(a - b) / scale)


def _fd_params(f: Callable[[], float], params: np.ndarray, touch: Callable[[], None], h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(params)
    for i in range(params.size):
        old = params[i]
        params[i] = old + h
        touch()
        up = f()
        params[i] = old - h
        touch()
        down = f()
        params[i] = old
        touch()
        grad[i] = (up - down) / (2 * h)
    return grad


def gradient_errors(n_instances: int = 100, seed: int = 0) -> dict[str, float]:
    """Worst relative error, per gradient path, of analytic vs central-difference gradients."""
    rng = make_rng(seed, "check-gradients")
    worst = {"mlp_input": 0.0, "value": 0.0, "policy_mean": 0.0, "policy_log_std": 0.0, "log_prob": 0.0}
    low, high = np.array([-1.2, -0.07]), np.array([0.6, 0.07])
    for _ in range(n_instances):
        hidden = tuple(int(h) for h in rng.integers(1, 9, size=int(rng.integers(1, 3))))
        obs = rng.uniform(low, high)

        net = Mlp([2, *hidden, 3], rng)
        x = rng.normal(size=2)
        w = rng.normal(size=3)
        _, cache = net.forward(x)
        _, g_in = net.backward(cache, w)
        g_num = np.array([(float(w @ net.forward(x + e)[0]) - float(w @ net.forward(x - e)[0])) / 2e-6
                          for e in 1e-6 * np.eye(2)])
        worst["mlp_input"] = max(worst["mlp_input"], _rel_err(g_in, g_num))

        critic = MlpCritic(hidden, rng, Adam(1e-3), low, high)
        p = critic.net.params
        num = _fd_params(lambda: critic.value(obs), p, critic.net.touch)
        worst["value"] = max(worst["value"], _rel_err(critic.grad_value(obs), num))

        policy = GaussianMlpPolicy(hidden, rng, Adam(1e-3), low, high)
        p = policy.net.params
        scaled = policy._scale(obs)
        for j, key in ((0, "policy_mean"), (1, "policy_log_std")):
            _, cache = policy.net.forward(scaled)
            upstream = np.zeros(2)
            upstream[j] = 1.0
            analytic = policy.net.backward(cache, upstream)[0]
            num = _fd_params(lambda: float(policy.net.forward(scaled)[0][j]), p, policy.net.touch)
            worst[key] = max(worst[key], _rel_err(analytic, num))
        a = policy.sample(obs, rng)
        num = _fd_params(lambda: policy.log_prob(obs, a), p, policy.net.touch)
        worst["log_prob"] = max(worst["log_prob"], _rel_err(policy.grad_log_prob(obs, a), num))
    return worst


def check_gradients(quick: bool = False) -> list[CheckResult]:
    n = 10 if quick else 100
    return [_result(f"gradient_{k}", v, 1e-5, f"{n} random networks") for k, v in gradient_errors(n).items()]


def lookahead_trace_gap(grid_episodes: int = 5, car_episodes: int = 1, seed: int = 0) -> float:
    """Max over recorded steps of ``|(delta + phi(s, a)) - (r + gamma phi(s', a') + gamma R - V(s))|``."""
    worst = 0.0
    traces = []
    env = PuddleJumpGrid(GridConfig())
    cfg = ACConfig(scheme=grid_scheme(LOOK_AHEAD), theta_bound=3.0)
    policy, critic = make_gridworld_agent(env, cfg)
    rng = make_rng(seed, "check-lookahead", "grid")
    for _ in range(grid_episodes):
        trace = []
        ac_pba_episode(env, policy, critic, cfg, rng, trace)
        traces.append((cfg.gamma, trace))
    if car_episodes:
        car_cfg = ACConfig(scheme=car_scheme(LOOK_AHEAD), alpha_theta=1e-5, alpha_omega=5.6e-4, gamma=0.99,
                           T_max=car_episodes)
        car = MountainCar(CarConfig())
        init = make_rng(seed, "check-lookahead", "car-init")
        pol = GaussianMlpPolicy((16, 16), init, Adam(car_cfg.alpha_theta), car.observation_low, car.observation_high)
        cri = MlpCritic((16, 16), init, Adam(car_cfg.alpha_omega), car.observation_low, car.observation_high)
        rng = make_rng(seed, "check-lookahead", "car")
        for _ in range(car_episodes):
            trace = []
            ac_pba_episode(car, pol, cri, car_cfg, rng, trace)
            traces.append((car_cfg.gamma, trace))
    for gamma, trace in traces:
        for st in trace:
            free = st.r + gamma * st.phi_next + gamma * st.bootstrap - st.v_s
            worst = max(worst, abs(st.actor_coeff - free))
    return worst


def check_lookahead_algebra(quick: bool = False) -> list[CheckResult]:
    gap = lookahead_trace_gap(2 if quick else 5, 1)
    return [_result("lookahead_algebra", gap, 1e-12, "gridworld and mountain-car traces")]


SUITES: dict[str, Callable[[bool], list[CheckResult]]] = {
    "learnability": check_learnability,
    "advice_identity": check_advice_identity,
    "telescoping": check_telescoping,
    "greedy_invariance": check_greedy_invariance,
    "soft_fixed_point": check_soft_fixed_point,
    "score": check_score,
    "gradients": check_gradients,
    "lookahead_algebra": check_lookahead_algebra,
}


def run_suite(name: str, quick: bool = False) -> list[CheckResult]:
    if name == "all":
        return [r for suite in SUITES.values() for r in suite(quick)]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](quick)
