"""Tabular soft Q-learning (temperature 1), optionally shaped with a state potential."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .mdp import Environment, Experience, RunRecord, ValidationError, make_rng
from .shaping import NONE, PBRS, PotentialScheme, pbrs_bonus


@dataclass
class SoftQConfig:
    """``learning_rate`` decays as ``lr / (1 + k / decay_steps)``; ``decay_steps=None`` keeps it constant."""

    alpha: float = 1.0
    learning_rate: float = 0.5
    decay_steps: Optional[float] = 10_000.0
    gamma: float = 1.0
    init: Union[float, np.ndarray] = 0.0

    def __post_init__(self):
        if self.alpha != 1.0:
            raise ValidationError("only temperature alpha = 1 is implemented")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be non-negative")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")

    def rate(self, k: int) -> float:
        if self.decay_steps is None:
            return self.learning_rate
        return self.learning_rate / (1.0 + k / self.decay_steps)

    def initial_table(self, n_obs: int, n_actions: int) -> np.ndarray:
        if np.isscalar(self.init):
            return np.full((n_obs, n_actions), float(self.init))
        Q = np.array(self.init, dtype=float)
        if Q.shape != (n_obs, n_actions):
            raise ValidationError(f"init table shape {Q.shape} != {(n_obs, n_actions)}")
        return Q


def soft_value(Q: np.ndarray, s) -> float:
    row = Q[s]
    m = row.max()
    return float(m + np.log(np.exp(row - m).sum()))


def soft_policy(Q: np.ndarray, s) -> np.ndarray:
    row = Q[s]
    z = np.exp(row - row.max())
    return z / z.sum()


def soft_bellman_error(Q: np.ndarray, exp: Experience, scheme: PotentialScheme, gamma: float) -> float:
    if scheme.mode not in (NONE, PBRS):
        raise ValidationError(f"soft Q-learning only takes state potentials, got mode {scheme.mode!r}")
    r = exp.r
    if scheme.mode == PBRS:
        r += pbrs_bonus(scheme, exp.s, exp.s_next, exp.terminal, gamma)
    bootstrap = 0.0 if exp.terminal else soft_value(Q, exp.s_next)
    return r + gamma * bootstrap - Q[exp.s, exp.a]


def soft_q_update(Q: np.ndarray, exp: Experience, scheme: PotentialScheme, lr: float, gamma: float) -> float:
    """Apply one update in place to ``Q[s, a]`` and return the Bellman error used."""
    delta = soft_bellman_error(Q, exp, scheme, gamma)
    if not np.isfinite(delta):
        raise ValidationError(f"non-finite soft Bellman error {delta!r}")
    Q[exp.s, exp.a] += lr * delta
    return delta


def sample_action(p: np.ndarray, rng: np.random.Generator) -> int:
    return int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), len(p) - 1))


def train_soft_q(env: Environment, scheme: PotentialScheme, cfg: SoftQConfig, episodes: int,
                 seed: int, tag: str | None = None) -> tuple[np.ndarray, list[RunRecord]]:
    """Learn on-line with the soft policy of the current table as behaviour policy."""
    if not env.discrete:
        raise ValidationError("tabular soft Q-learning needs a discrete environment")
    Q = cfg.initial_table(env.observation_count, env.action_count)
    tag = tag or f"softq-{scheme.mode}"
    rng = make_rng(seed, "soft-q", tag)
    records = []
    k = 0
    for ep in range(episodes):
        s = env.reset(rng)
        total, steps, done = 0.0, 0, False
        for steps in range(1, env.max_steps + 1):
            a = sample_action(soft_policy(Q, s), rng)
            s2, r, done = env.step(a, rng)
            soft_q_update(Q, Experience(s, a, r, s2, done), scheme, cfg.rate(k), cfg.gamma)
            k += 1
            total += r
            s = s2
            if done:
                break
        records.append(RunRecord(ep, seed, tag, total, steps, done))
    return Q, records


def soft_policy_success_rate(env: Environment, Q: np.ndarray, rollouts: int, seed: int) -> float:
    rng = make_rng(seed, "soft-q-eval")
    hits = 0
    for _ in range(rollouts):
        s = env.reset(rng)
        for _ in range(env.max_steps):
            s, _, done = env.step(sample_action(soft_policy(Q, s), rng), rng)
            if done:
                hits += 1
                break
    return hits / rollouts


def learnability_experiment(env: Environment, phi_s: np.ndarray, Q0: np.ndarray, steps: int,
                            seed: int, cfg: SoftQConfig | None = None) -> float:
    """Max over steps and entries of ``|dQ_k - dQ'_k|`` for two lock-step learners.

    Learner L (PBRS with potential ``phi_s``, init ``Q0``) acts in ``env``;
    learner L' (no shaping, init ``Q0 + phi_s``) is fed the very same tuples.
    """
    cfg = cfg or SoftQConfig()
    phi_s = np.asarray(phi_s, dtype=float)
    shaped = PotentialScheme(PBRS, phi_s=lambda s: phi_s[s])
    plain = PotentialScheme(NONE)
    Q = np.array(Q0, dtype=float)
    Qp = Q + phi_s[:, None]
    Q_init, Qp_init = Q.copy(), Qp.copy()
    rng = make_rng(seed, "learnability")
    worst = 0.0
    s = env.reset(rng)
    t = 0
    for k in range(steps):
        a = sample_action(soft_policy(Q, s), rng)
        s2, r, done = env.step(a, rng)
        t += 1
        exp = Experience(s, a, r, s2, done)
        lr = cfg.rate(k)
        soft_q_update(Q, exp, shaped, lr, cfg.gamma)
        soft_q_update(Qp, exp, plain, lr, cfg.gamma)
        # only entry (s, a) moved, so the running max needs just that entry
        dev = abs((Q[s, a] - Q_init[s, a]) - (Qp[s, a] - Qp_init[s, a]))
        worst = max(worst, dev)
        if done or t >= env.max_steps:
            s, t = env.reset(rng), 0
        else:
            s = s2
    return worst


def recover_greedy_policy(Q_shaped: np.ndarray, phi_sa: np.ndarray | None = None) -> np.ndarray:
    """Per-observation ``argmax_a (Q'(s, a) + phi(s, a))``, lowest index on ties."""
    Q = np.asarray(Q_shaped, dtype=float)
    if phi_sa is not None:
        Q = Q + np.asarray(phi_sa, dtype=float)
    return np.argmax(Q, axis=1)
