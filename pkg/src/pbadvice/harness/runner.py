"""Seeded experiment execution and aggregation."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..actor_critic import ACConfig, run_ac_car, run_ac_gridworld
from ..envs import GridConfig, PuddleJumpGrid
from ..mdp import RunRecord, make_rng
from ..shaping import car_scheme, grid_scheme
from .config import ExperimentConfig, config_from_dict


@dataclass
class ExperimentResult:
    records: list[RunRecord]
    # (scheme, seed) -> final-policy convergence flag; mountain car only
    converged: dict[tuple[str, int], bool] = field(default_factory=dict)


def _ac_config(cfg: ExperimentConfig, mode: str) -> ACConfig:
    agent = cfg.agent_params()
    pot = cfg.potential_params()
    if cfg.domain == "gridworld":
        scheme = grid_scheme(mode, pot["u0"], pot["u1"], pot["kappa"], cfg.env_config())
    else:
        scheme = car_scheme(mode)
    return ACConfig(scheme=scheme, alpha_theta=agent["alpha_theta"], alpha_omega=agent["alpha_omega"],
                    gamma=agent["gamma"], T_max=cfg.episodes, entropy_bonus=agent["entropy_bonus"],
                    theta_bound=agent.get("theta_bound"),
                    printed_critic_sign=agent["printed_critic_sign"])


def run_single(cfg: ExperimentConfig, mode: str, seed: int):
    """One (scheme, seed) run; returns ``(records, converged or None)``."""
    ac = _ac_config(cfg, mode)
    if cfg.domain == "gridworld":
        return run_ac_gridworld(ac, seed, cfg.env_config(), tag=mode), None
    agent = cfg.agent_params()
    return run_ac_car(ac, seed, cfg.env_config(), tag=mode, hidden=tuple(agent["hidden"]),
                      eval_rollouts=agent["eval_rollouts"])


def _worker(args):
    data, mode, seed = args
    return run_single(config_from_dict(data), mode, seed)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, seed_offset: int = 0) -> ExperimentResult:
    """Run every (scheme, seed) pair; output order is scheme-major, then seed, then episode."""
    data = cfg.to_dict()
    tasks = [(data, mode, seed + seed_offset) for mode in cfg.schemes for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_worker, tasks))
    else:
        outputs = [_worker(t) for t in tasks]
    result = ExperimentResult([])
    for (_, mode, seed), (records, converged) in zip(tasks, outputs):
        result.records.extend(records)
        if converged is not None:
            result.converged[(mode, seed)] = converged
    return result


def _trailing_mean(x: np.ndarray, window: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def aggregate_curves(records: Iterable[RunRecord], smoothing_window: int = 10) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per scheme: mean and std across seeds of each episode's return, then a
    trailing moving average (shorter at the left edge) of both."""
    if smoothing_window < 1:
        raise ValueError("smoothing_window must be >= 1")
    table: dict[str, dict[int, dict[int, float]]] = {}
    for r in records:
        table.setdefault(r.scheme, {}).setdefault(r.seed, {})[r.episode] = r.ret
    curves = {}
    for scheme, by_seed in table.items():
        n_ep = max(max(eps) for eps in by_seed.values()) + 1
        grid = np.full((len(by_seed), n_ep), np.nan)
        for i, eps in enumerate(by_seed.values()):
            for ep, ret in eps.items():
                grid[i, ep] = ret
        mean = np.nanmean(grid, axis=0)
        std = np.nanstd(grid, axis=0)
        curves[scheme] = (_trailing_mean(mean, smoothing_window), _trailing_mean(std, smoothing_window))
    return curves


def episodes_to_fraction(curve: np.ndarray, start: float, fraction: float = 0.9,
                         tail: int | None = None, sustained: bool = True) -> int:
    """Episodes until ``curve`` has covered ``fraction`` of the way from ``start``
    to its asymptote (mean of the last ``tail`` points, default 10%).

    With ``sustained`` the count is the settling time: the first episode after
    which the curve never falls back below the target. Otherwise it is the
    first crossing.
    """
    curve = np.asarray(curve, dtype=float)
    tail = tail or max(1, len(curve) // 10)
    asymptote = curve[-tail:].mean()
    target = start + fraction * (asymptote - start)
    reached = curve >= target if asymptote >= start else curve <= target
    if sustained:
        missed = np.flatnonzero(~reached)
        return int(missed[-1] + 1) if missed.size else 0
    hit = np.flatnonzero(reached)
    return int(hit[0]) if hit.size else len(curve)


def uniform_policy_return(grid: GridConfig | None = None, rollouts: int = 2000, seed: int = 0) -> float:
    """Monte Carlo mean episode return of the uniform random gridworld policy."""
    env = PuddleJumpGrid(grid)
    rng = make_rng(seed, "uniform-policy")
    total = 0.0
    for _ in range(rollouts):
        env.reset(rng)
        for _ in range(env.max_steps):
            _, r, done = env.step(int(rng.integers(env.action_count)), rng)
            total += r
            if done:
                break
    return total / rollouts


@dataclass
class SweepResult:
    pj_values: list[float]
    # scheme -> p_j -> per-seed mean return over the first episodes
    per_seed: dict[str, dict[float, dict[int, float]]]

    def mean_table(self) -> dict[str, dict[float, float]]:
        return {s: {pj: float(np.mean(list(v.values()))) for pj, v in by_pj.items()}
                for s, by_pj in self.per_seed.items()}


def sweep_pj(cfg: ExperimentConfig, pj_values: Sequence[float], jobs: int = 1, seed_offset: int = 0,
             first_episodes: int = 100) -> SweepResult:
    """Mean return over the first ``first_episodes`` episodes for each (scheme, p_j)."""
    if cfg.domain != "gridworld":
        raise ValueError("sweep-pj only applies to the gridworld domain")
    per_seed: dict[str, dict[float, dict[int, float]]] = {s: {} for s in cfg.schemes}
    episodes = min(cfg.episodes, first_episodes) if cfg.episodes else first_episodes
    for pj in pj_values:
        sub = dataclasses.replace(cfg, env={**cfg.env, "p_jump": float(pj)}, episodes=episodes)
        result = run_experiment(sub, jobs=jobs, seed_offset=seed_offset)
        for r in result.records:
            per_seed[r.scheme].setdefault(float(pj), {}).setdefault(r.seed, []).append(r.ret)
        for s in cfg.schemes:
            per_seed[s][float(pj)] = {seed: float(np.mean(v)) for seed, v in per_seed[s][float(pj)].items()}
    return SweepResult([float(p) for p in pj_values], per_seed)


def success_table(result: ExperimentResult) -> dict[str, float]:
    """Fraction of seeds whose final policy converged to the goal, per scheme."""
    by_scheme: dict[str, list[bool]] = {}
    for (scheme, _), ok in result.converged.items():
        by_scheme.setdefault(scheme, []).append(ok)
    return {s: float(np.mean(v)) for s, v in by_scheme.items()}
