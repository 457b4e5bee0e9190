"""Puddle-jump gridworld and continuous mountain car."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mdp import Environment, StepOutcome, ValidationError

# Gridworld action indices.
UP, DOWN, LEFT, RIGHT, JUMP = range(5)
ACTION_NAMES = ("up", "down", "left", "right", "jump")
PUDDLE_ROW = 2


class GridState(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridConfig:
    p_jump: float = 0.2
    step_reward: float = -0.05
    goal_reward: float = 1000.0
    max_steps: int = 1000
    size: int = 10

    def __post_init__(self):
        if not 0.0 <= self.p_jump <= 1.0:
            raise ValidationError(f"p_jump must lie in [0, 1], got {self.p_jump}")
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.size < 4:
            raise ValidationError("grid needs at least 4 rows for the puddle geometry")

    @property
    def start(self) -> GridState:
        return GridState(0, 0)

    @property
    def goal(self) -> GridState:
        return GridState(self.size - 1, self.size - 1)

    @property
    def aliased(self) -> tuple[GridState, GridState]:
        """The two goal-adjacent cells the agent cannot tell apart."""
        n = self.size - 1
        return GridState(n, n - 1), GridState(n - 1, n)


def grid_successor(s: GridState, a: int, cfg: GridConfig, jumped: bool = True) -> GridState:
    """Deterministic successor; ``jumped`` selects the outcome of a jump attempt."""
    x, y = s
    n = cfg.size
    if a == JUMP:
        if jumped and y in (PUDDLE_ROW - 1, PUDDLE_ROW + 1):
            return GridState(x, 2 * PUDDLE_ROW - y)
        return s
    if a == UP:
        x2, y2 = x, y + 1
    elif a == DOWN:
        x2, y2 = x, y - 1
    elif a == LEFT:
        x2, y2 = x - 1, y
    elif a == RIGHT:
        x2, y2 = x + 1, y
    else:
        raise ValidationError(f"invalid gridworld action {a!r}")
    if not (0 <= x2 < n and 0 <= y2 < n) or y2 == PUDDLE_ROW:
        return s
    return GridState(x2, y2)


def grid_transitions(s: GridState, a: int, cfg: GridConfig) -> list[tuple[float, GridState]]:
    """All ``(probability, successor)`` outcomes of taking ``a`` in ``s``."""
    if a == JUMP and s.y in (PUDDLE_ROW - 1, PUDDLE_ROW + 1):
        return [(cfg.p_jump, grid_successor(s, a, cfg, True)),
                (1.0 - cfg.p_jump, s)]
    return [(1.0, grid_successor(s, a, cfg))]


def grid_reward(s_next: GridState, cfg: GridConfig) -> tuple[float, bool]:
    if s_next == cfg.goal:
        return cfg.step_reward + cfg.goal_reward, True
    return cfg.step_reward, False


def grid_step(s: GridState, a: int, rng: np.random.Generator, cfg: GridConfig) -> StepOutcome:
    if not isinstance(a, (int, np.integer)) or not 0 <= a < 5:
        raise ValidationError(f"invalid gridworld action {a!r}")
    a = int(a)
    if a == JUMP and s.y in (PUDDLE_ROW - 1, PUDDLE_ROW + 1):
        s_next = grid_successor(s, a, cfg, jumped=rng.random() < cfg.p_jump)
    else:
        s_next = grid_successor(s, a, cfg)
    r, terminal = grid_reward(s_next, cfg)
    return StepOutcome(s_next, r, terminal)


def grid_observe(s: GridState, size: int = 10) -> int:
    """Observation id; the two aliased goal-adjacent cells share one id.

    Ids are contiguous: row-major cell index, with ``(n-2, n-1)`` folded onto
    ``(n-1, n-2)`` and the goal moved down to fill the gap.
    """
    x, y = s
    n = size
    if (x, y) == (n - 2, n - 1):
        return (n - 2) * n + (n - 1)
    if (x, y) == (n - 1, n - 1):
        return n * n - 2
    return y * n + x


def grid_observation_count(size: int = 10) -> int:
    return size * size - 1


def grid_states(size: int = 10) -> list[GridState]:
    return [GridState(x, y) for y in range(size) for x in range(size)]


class PuddleJumpGrid(Environment):
    discrete = True
    action_count = 5

    def __init__(self, cfg: GridConfig | None = None):
        self.cfg = cfg or GridConfig()
        self.observation_count = grid_observation_count(self.cfg.size)
        self.max_steps = self.cfg.max_steps
        self.state = self.cfg.start

    def observe(self, s: GridState) -> int:
        return grid_observe(s, self.cfg.size)

    def reset(self, rng=None) -> int:
        self.state = self.cfg.start
        return self.observe(self.state)

    def step(self, action, rng) -> StepOutcome:
        out = grid_step(self.state, action, rng, self.cfg)
        self.state = out.s_next
        return StepOutcome(self.observe(out.s_next), out.reward, out.terminal)


# Mountain car.
P_MIN, P_MAX = -1.2, 0.6
V_MIN, V_MAX = -0.07, 0.07


class CarState(NamedTuple):
    p: float
    v: float


@dataclass(frozen=True)
class CarConfig:
    goal_position: float = 0.45
    force_coeff: float = 0.0015
    gravity_coeff: float = 0.0025
    goal_reward: float = 100.0
    max_steps: int = 999
    start: str = "fixed"

    def __post_init__(self):
        if self.goal_position > P_MAX:
            raise ValidationError(f"goal_position must be <= {P_MAX}")
        if self.start not in ("fixed", "uniform"):
            raise ValidationError(f"start must be 'fixed' or 'uniform', got {self.start!r}")
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")


def car_step(s: CarState, a: float, cfg: CarConfig) -> StepOutcome:
    a = float(a)
    if not math.isfinite(a):
        raise ValidationError(f"non-finite action {a!r}")
    a = min(max(a, -1.0), 1.0)
    p, v = s
    v = v + a * cfg.force_coeff - math.cos(3.0 * p) * cfg.gravity_coeff
    v = min(max(v, V_MIN), V_MAX)
    p = min(max(p + v, P_MIN), P_MAX)
    if p == P_MIN and v < 0.0:
        v = 0.0
    reward = -a * a
    terminal = p >= cfg.goal_position
    if terminal:
        reward += cfg.goal_reward
    return StepOutcome(CarState(p, v), reward, terminal)


class MountainCar(Environment):
    discrete = False
    observation_low = np.array([P_MIN, V_MIN])
    observation_high = np.array([P_MAX, V_MAX])
    action_low, action_high = -1.0, 1.0

    def __init__(self, cfg: CarConfig | None = None):
        self.cfg = cfg or CarConfig()
        self.max_steps = self.cfg.max_steps
        self.state = CarState(-0.5, 0.0)

    def reset(self, rng=None) -> np.ndarray:
        if self.cfg.start == "uniform":
            if rng is None:
                raise ValidationError("uniform start needs an rng")
            self.state = CarState(float(rng.uniform(-0.6, -0.4)), 0.0)
        else:
            self.state = CarState(-0.5, 0.0)
        return np.array(self.state)

    def step(self, action, rng=None) -> StepOutcome:
        out = car_step(self.state, action, self.cfg)
        self.state = out.s_next
        return StepOutcome(np.array(out.s_next), out.reward, out.terminal)
