"""Exact solvers on small enumerable MDPs.

These are the ground truth the learning code is checked against: iterative
policy evaluation, value iteration, the soft Bellman fixed point and the exact
policy gradient of a tabular softmax policy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .envs import (GridConfig, grid_observe, grid_observation_count, grid_reward, grid_states,
                   grid_transitions)
from .mdp import ValidationError
from .shaping import LOOK_AHEAD, LOOK_BACK, NONE, PBRS


class ConvergenceError(RuntimeError):
    pass


@dataclass
class TabularMDP:
    """Finite MDP with transition tensor ``T[s, a, s']`` and expected reward ``R[s, a]``."""

    T: np.ndarray
    R: np.ndarray
    terminal: np.ndarray
    gamma: float
    rho0: Optional[np.ndarray] = None

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        S, A = self.R.shape
        if self.T.shape != (S, A, S):
            raise ValidationError(f"T has shape {self.T.shape}, expected {(S, A, S)}")
        if np.any(self.T < 0) or np.max(np.abs(self.T.sum(axis=2) - 1.0)) > 1e-12:
            raise ValidationError("every T[s, a, :] must be a probability vector")
        for s in np.flatnonzero(self.terminal):
            if np.any(self.T[s, :, s] != 1.0) or np.any(self.R[s] != 0.0):
                raise ValidationError(f"terminal state {s} must self-loop with zero reward")
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"oracle solvers need gamma in (0, 1), got {self.gamma}")
        if self.rho0 is None:
            self.rho0 = np.full(S, 1.0 / S)
        self.rho0 = np.asarray(self.rho0, dtype=float)

    @property
    def n_states(self) -> int:
        return self.R.shape[0]

    @property
    def n_actions(self) -> int:
        return self.R.shape[1]


def random_mdp(rng: np.random.Generator, n_states: int = 5, n_actions: int = 3,
               gamma: float = 0.9) -> TabularMDP:
    """Dirichlet(1) transition rows, rewards uniform in [-1, 1], uniform start."""
    T = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    R = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    return TabularMDP(T, R, np.zeros(n_states, dtype=bool), gamma)


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n_actions), size=n_states)


def _check_policy(mdp: TabularMDP, policy: np.ndarray) -> np.ndarray:
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError(f"policy shape {policy.shape} does not match the MDP")
    if np.any(policy < 0) or np.max(np.abs(policy.sum(axis=1) - 1.0)) > 1e-9:
        raise ValidationError("policy rows must be probability vectors")
    return policy


def _potentials(mdp, phi_s=None, phi_sa=None):
    """Zero potentials on terminal states."""
    live = ~mdp.terminal
    if phi_s is not None:
        phi_s = np.where(live, np.asarray(phi_s, dtype=float), 0.0)
    if phi_sa is not None:
        phi_sa = np.where(live[:, None], np.asarray(phi_sa, dtype=float), 0.0)
    return phi_s, phi_sa


def shaped_reward(mdp: TabularMDP, mode: str, phi_s=None, phi_sa=None,
                  policy: np.ndarray | None = None) -> np.ndarray:
    """Expected reward of the shaped MDP ``M'`` under ``mode``.

    Look-ahead advice depends on the next action, so its expectation needs the
    policy that picks ``a'``.
    """
    phi_s, phi_sa = _potentials(mdp, phi_s, phi_sa)
    g = mdp.gamma
    if mode == NONE:
        return mdp.R.copy()
    if mode == PBRS:
        return mdp.R + g * mdp.T @ phi_s - phi_s[:, None]
    if mode == LOOK_AHEAD:
        if policy is None:
            raise ValidationError("look-ahead shaping needs the policy choosing a'")
        next_phi = (policy * phi_sa).sum(axis=1)
        return mdp.R + g * mdp.T @ next_phi - phi_sa
    if mode == LOOK_BACK:
        raise ValidationError("look-back advice is not Markov in (s, a); no tabular shaped reward")
    raise ValidationError(f"unknown shaping mode {mode!r}")


def policy_evaluation(mdp: TabularMDP, policy: np.ndarray, mode: str = NONE, phi_s=None,
                      phi_sa=None, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """``Q^pi`` of ``M`` (or of the shaped ``M'``) by iterated expectation backups."""
    policy = _check_policy(mdp, policy)
    R = shaped_reward(mdp, mode, phi_s, phi_sa, policy)
    Q = np.zeros_like(R)
    for _ in range(max_iter):
        V = (policy * Q).sum(axis=1)
        Q_new = R + mdp.gamma * mdp.T @ V
        if np.max(np.abs(Q_new - Q)) <= tol:
            return Q_new
        Q = Q_new
    raise ConvergenceError("policy evaluation hit its iteration cap")


def policy_objective(mdp: TabularMDP, policy: np.ndarray, **shaping) -> float:
    """``J(pi) = E_{s0 ~ rho0}[V^pi(s0)]``."""
    Q = policy_evaluation(mdp, policy, **shaping)
    return float(mdp.rho0 @ (policy * Q).sum(axis=1))


def greedy(Q: np.ndarray) -> np.ndarray:
    """Per-state argmax, lowest index on ties."""
    return np.argmax(Q, axis=1)


def value_iteration(mdp: TabularMDP, mode: str = NONE, phi_s=None, phi_sa=None,
                    tol: float = 1e-10, max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Optimal ``Q`` of ``M`` or of the shaped ``M'``, plus its greedy policy.

    For look-ahead advice the agent acting in ``M'`` picks ``a'`` greedily on
    ``Q' + phi``, so the backup bootstraps through ``max_a' (Q'(s', a') + phi(s', a'))``
    and the returned policy is that recovered one.
    """
    phi_s, phi_sa = _potentials(mdp, phi_s, phi_sa)
    g, T = mdp.gamma, mdp.T
    if mode == NONE:
        R, offset = mdp.R, 0.0
    elif mode == PBRS:
        R, offset = mdp.R + g * T @ phi_s - phi_s[:, None], 0.0
    elif mode == LOOK_AHEAD:
        R, offset = mdp.R - phi_sa, phi_sa
    else:
        raise ValidationError(f"value iteration does not support mode {mode!r}")
    Q = np.zeros_like(mdp.R)
    for _ in range(max_iter):
        Q_new = R + g * T @ (Q + offset).max(axis=1)
        if np.max(np.abs(Q_new - Q)) <= tol:
            return Q_new, greedy(Q_new + offset)
        Q = Q_new
    raise ConvergenceError("value iteration hit its iteration cap")


def _logsumexp_rows(Q: np.ndarray) -> np.ndarray:
    m = Q.max(axis=1)
    return m + np.log(np.exp(Q - m[:, None]).sum(axis=1))


def soft_q_fixed_point(mdp: TabularMDP, tol: float = 1e-10, max_iter: int = 1_000_000) -> np.ndarray:
    """Solve ``Q = R + gamma * T @ logsumexp(Q)`` (temperature 1) by iteration.

    Terminal states are absorbing with value 0, matching the episodic learner.
    """
    live = ~mdp.terminal
    Q = np.zeros_like(mdp.R)
    for _ in range(max_iter):
        V = np.where(live, _logsumexp_rows(Q), 0.0)
        Q_new = mdp.R + mdp.gamma * mdp.T @ V
        Q_new[~live] = 0.0
        if np.max(np.abs(Q_new - Q)) <= tol:
            return Q_new
        Q = Q_new
    raise ConvergenceError("soft Bellman iteration hit its iteration cap")


def softmax_policy(theta: np.ndarray) -> np.ndarray:
    z = np.exp(theta - theta.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def exact_policy_gradient(mdp: TabularMDP, theta: np.ndarray) -> np.ndarray:
    """``grad_theta J`` for a tabular softmax policy, via two linear solves.

    Occupancy ``d = rho0 (I - gamma P_pi)^-1`` and ``Q^pi`` are solved exactly;
    the gradient is ``d(s) pi(a|s) (Q(s, a) - V(s))``.
    """
    pi = softmax_policy(theta)
    S = mdp.n_states
    P = np.einsum("sa,sat->st", pi, mdp.T)
    r_pi = (pi * mdp.R).sum(axis=1)
    A = np.eye(S) - mdp.gamma * P
    try:
        V = np.linalg.solve(A, r_pi)
        d = np.linalg.solve(A.T, mdp.rho0)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("occupancy system is singular") from exc
    Q = mdp.R + mdp.gamma * mdp.T @ V
    return d[:, None] * pi * (Q - V[:, None])


def export_gridworld_as_tabular(cfg: GridConfig | None = None, gamma_override: float = 0.95) -> TabularMDP:
    """The puddle-jump gridworld over observation ids.

    An aliased observation transitions like an even mixture of the cells behind
    it. The goal observation is absorbing with zero reward; the start is ``(0, 0)``.
    """
    cfg = cfg or GridConfig()
    n = grid_observation_count(cfg.size)
    A = 5
    T = np.zeros((n, A, n))
    R = np.zeros((n, A))
    counts = np.zeros(n)
    goal = grid_observe(cfg.goal, cfg.size)
    for s in grid_states(cfg.size):
        o = grid_observe(s, cfg.size)
        if o == goal:
            continue
        counts[o] += 1
        for a in range(A):
            for p, s2 in grid_transitions(s, a, cfg):
                T[o, a, grid_observe(s2, cfg.size)] += p
                R[o, a] += p * grid_reward(s2, cfg)[0]
    live = counts > 0
    T[live] /= counts[live, None, None]
    R[live] /= counts[live, None]
    T[goal, :, goal] = 1.0
    terminal = np.zeros(n, dtype=bool)
    terminal[goal] = True
    rho0 = np.zeros(n)
    rho0[grid_observe(cfg.start, cfg.size)] = 1.0
    return TabularMDP(T, R, terminal, gamma_override, rho0)
