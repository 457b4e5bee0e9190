"""Advantage actor-critic with potential-based advice (AC-PBA).

The per-step loop in :func:`ac_pba_episode` is shared by the tabular softmax
agent (gridworld) and the Gaussian MLP agent (mountain car); both expose the
small ``sample``/``actor_step`` and ``value``/``critic_step`` surface used here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .approximator import Adam, GaussianMlpPolicy, MlpCritic, gaussian_log_prob_grads
from .envs import CarConfig, GridConfig, MountainCar, PuddleJumpGrid
from .mdp import Environment, RunRecord, ValidationError, make_rng
from .shaping import LOOK_AHEAD, LOOK_BACK, NONE, PBRS, PotentialScheme


class DivergenceError(RuntimeError):
    """Raised when a TD error stops being finite."""


@dataclass
class ACConfig:
    scheme: PotentialScheme = field(default_factory=PotentialScheme)
    alpha_theta: float = 0.2
    alpha_omega: float = 0.001
    gamma: float = 1.0
    T_max: int = 300
    entropy_bonus: float = 0.0
    # Box projection |theta| <= theta_bound for the tabular actor (None = unprojected).
    theta_bound: Optional[float] = None
    # Algorithm listing prints ``omega <- omega - a*delta*grad V``; kept for A/B only.
    printed_critic_sign: bool = False

    def __post_init__(self):
        if self.alpha_theta <= 0 or self.alpha_omega <= 0:
            raise ValidationError("learning rates must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.T_max < 0:
            raise ValidationError("T_max must be non-negative")
        if self.entropy_bonus < 0:
            raise ValidationError("entropy_bonus must be non-negative")


# Tabular softmax policy and critic.

def softmax_probs(theta: np.ndarray, obs: int) -> np.ndarray:
    row = theta[obs]
    z = np.exp(row - row.max())
    return z / z.sum()


def grad_log_softmax(theta: np.ndarray, obs: int, a: int) -> np.ndarray:
    """Gradient of ``log pi(a|obs)`` w.r.t. ``theta[obs, :]`` (other rows are zero)."""
    g = -softmax_probs(theta, obs)
    g[a] += 1.0
    return g


def softmax_entropy_grad(theta: np.ndarray, obs: int) -> np.ndarray:
    p = softmax_probs(theta, obs)
    logp = np.log(np.maximum(p, 1e-300))
    return -p * (logp - p @ logp)


class TabularSoftmaxPolicy:
    def __init__(self, n_obs: int, n_actions: int, alpha: float, entropy_bonus: float = 0.0,
                 theta_bound: float | None = None):
        self.theta = np.zeros((n_obs, n_actions))
        self.alpha = alpha
        self.entropy_bonus = entropy_bonus
        self.theta_bound = theta_bound

    def probs(self, obs) -> np.ndarray:
        return softmax_probs(self.theta, obs)

    def sample(self, obs, rng: np.random.Generator) -> int:
        p = self.probs(obs)
        return int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), len(p) - 1))

    def grad_log_prob(self, obs, a) -> np.ndarray:
        return grad_log_softmax(self.theta, obs, a)

    def actor_step(self, obs, a, coeff: float) -> None:
        step = coeff * grad_log_softmax(self.theta, obs, a)
        if self.entropy_bonus:
            step += self.entropy_bonus * softmax_entropy_grad(self.theta, obs)
        self.theta[obs] += self.alpha * step
        if self.theta_bound is not None:
            np.clip(self.theta[obs], -self.theta_bound, self.theta_bound, out=self.theta[obs])


class TabularCritic:
    def __init__(self, n_obs: int, alpha: float):
        self.omega = np.zeros(n_obs)
        self.alpha = alpha

    def value(self, obs) -> float:
        return float(self.omega[obs])

    def critic_step(self, obs, delta: float) -> None:
        self.omega[obs] += self.alpha * delta


@dataclass
class StepTrace:
    """Quantities seen at one step, for checking the update algebra."""

    t: int
    obs: object
    a: object
    r: float
    terminal: bool
    v_s: float
    bootstrap: float
    phi_sa: float
    phi_next: float
    delta: float
    actor_coeff: float


def _shaping_terms(scheme, gamma, s, a, s2, a2, terminal, prev):
    """Return ``(bonus, actor_correction, phi_sa, phi_next)`` for one step."""
    mode = scheme.mode
    if mode == NONE:
        return 0.0, 0.0, 0.0, 0.0
    if mode == PBRS:
        nxt = 0.0 if terminal and scheme.terminal_potential_zero else float(scheme.phi_s(s2))
        return gamma * nxt - float(scheme.phi_s(s)), 0.0, 0.0, 0.0
    phi = float(scheme.phi_sa(s, a))
    if mode == LOOK_AHEAD:
        nxt = 0.0 if terminal and scheme.terminal_potential_zero else float(scheme.phi_sa(s2, a2))
        return gamma * nxt - phi, phi, phi, nxt
    back = 0.0 if prev is None else float(scheme.phi_sa(*prev)) / gamma
    return phi - back, 0.0, phi, 0.0


def ac_pba_episode(env: Environment, policy, critic, cfg: ACConfig, rng: np.random.Generator,
                   trace: Optional[list] = None) -> tuple[float, int, bool]:
    """Run one online AC-PBA episode, updating ``policy`` and ``critic`` in place.

    Returns ``(undiscounted env return, steps, reached terminal)``. With
    look-ahead advice the next action is sampled once, before the update, and
    executed on the following step.
    """
    scheme, gamma = cfg.scheme, cfg.gamma
    look_ahead = scheme.mode == LOOK_AHEAD
    critic_sign = -1.0 if cfg.printed_critic_sign else 1.0
    s = env.reset(rng)
    a = policy.sample(s, rng)
    prev = None
    total = 0.0
    terminal = False
    t = 0
    for t in range(env.max_steps):
        s2, r, terminal = env.step(a, rng)
        total += r
        bootstrap = 0.0 if terminal else critic.value(s2)
        a2 = policy.sample(s2, rng) if look_ahead and not terminal else None
        bonus, correction, phi_sa, phi_next = _shaping_terms(scheme, gamma, s, a, s2, a2, terminal, prev)
        v_s = critic.value(s)
        delta = r + bonus + gamma * bootstrap - v_s
        if not math.isfinite(delta):
            raise DivergenceError(f"non-finite TD error at step {t}: r={r}, V(s)={v_s}, R={bootstrap}")
        coeff = delta + correction
        if trace is not None:
            trace.append(StepTrace(t, s, a, r, terminal, v_s, bootstrap, phi_sa, phi_next, delta, coeff))
        policy.actor_step(s, a, coeff)
        critic.critic_step(s, critic_sign * delta)
        if terminal:
            break
        prev = (s, a)
        s = s2
        a = a2 if look_ahead else policy.sample(s2, rng)
    return total, t + 1, terminal


# Domain runners.

def make_gridworld_agent(env: PuddleJumpGrid, cfg: ACConfig):
    policy = TabularSoftmaxPolicy(env.observation_count, env.action_count, cfg.alpha_theta,
                                  cfg.entropy_bonus, cfg.theta_bound)
    critic = TabularCritic(env.observation_count, cfg.alpha_omega)
    return policy, critic


def run_ac_gridworld(cfg: ACConfig, seed: int, grid: GridConfig | None = None,
                     tag: str | None = None, return_agent: bool = False):
    """Train a tabular AC-PBA agent for ``cfg.T_max`` episodes."""
    env = PuddleJumpGrid(grid)
    policy, critic = make_gridworld_agent(env, cfg)
    tag = tag or cfg.scheme.mode
    rng = make_rng(seed, "gridworld", tag)
    records = []
    for ep in range(cfg.T_max):
        ret, steps, ok = ac_pba_episode(env, policy, critic, cfg, rng)
        records.append(RunRecord(ep, seed, tag, ret, steps, ok))
    if return_agent:
        return records, policy, critic
    return records


def car_default_config(scheme: PotentialScheme, T_max: int = 100) -> ACConfig:
    return ACConfig(scheme=scheme, alpha_theta=1e-5, alpha_omega=5.6e-4, gamma=0.99, T_max=T_max)


def evaluate_car_policy(policy: GaussianMlpPolicy, car: CarConfig, n_rollouts: int = 10,
                        seed: int = 0) -> int:
    """Number of deterministic-mean rollouts, from uniform starts, that reach the goal."""
    eval_cfg = CarConfig(**{**car.__dict__, "start": "uniform"})
    env = MountainCar(eval_cfg)
    rng = make_rng(seed, "car-eval")
    hits = 0
    for _ in range(n_rollouts):
        s = env.reset(rng)
        for _ in range(env.max_steps):
            s, _, done = env.step(float(np.clip(policy.mean_action(s), -1.0, 1.0)))
            if done:
                hits += 1
                break
    return hits


def run_ac_car(cfg: ACConfig, seed: int, car: CarConfig | None = None, tag: str | None = None,
               hidden: tuple[int, ...] = (64, 64), eval_rollouts: int = 10, return_agent: bool = False):
    """Train a Gaussian-policy AC-PBA agent; returns ``(records, converged)``."""
    car = car or CarConfig()
    env = MountainCar(car)
    tag = tag or cfg.scheme.mode
    init_rng = make_rng(seed, "car-init", tag)
    policy = GaussianMlpPolicy(hidden, init_rng, Adam(cfg.alpha_theta), env.observation_low, env.observation_high)
    critic = MlpCritic(hidden, init_rng, Adam(cfg.alpha_omega), env.observation_low, env.observation_high)
    rng = make_rng(seed, "car", tag)
    records = []
    for ep in range(cfg.T_max):
        ret, steps, ok = ac_pba_episode(env, policy, critic, cfg, rng)
        records.append(RunRecord(ep, seed, tag, ret, steps, ok))
    hits = evaluate_car_policy(policy, car, n_rollouts=eval_rollouts, seed=seed)
    converged = hits >= math.ceil(0.9 * eval_rollouts)
    if return_agent:
        return records, converged, policy, critic
    return records, converged


def score_zero_mean_check(policy, obs, n_samples: int = 0, rng: np.random.Generator | None = None) -> float:
    """Norm of ``E_{a~pi}[grad log pi(a|obs)]``.

    Tabular policies (a ``theta`` matrix or :class:`TabularSoftmaxPolicy`) are
    summed exactly over actions; Gaussian policies are estimated from
    ``n_samples`` draws.
    """
    if isinstance(policy, np.ndarray) or isinstance(policy, TabularSoftmaxPolicy):
        theta = policy if isinstance(policy, np.ndarray) else policy.theta
        p = softmax_probs(theta, obs)
        total = sum(p[a] * grad_log_softmax(theta, obs, a) for a in range(len(p)))
        return float(np.linalg.norm(total))
    rng = rng or make_rng(0, "score-check")
    mean, log_std = policy.head(obs)
    a = mean + np.exp(log_std) * rng.standard_normal(n_samples)
    d_mean, d_log_std = gaussian_log_prob_grads(mean, log_std, a)
    return float(np.hypot(d_mean.mean(), d_log_std.mean()))
