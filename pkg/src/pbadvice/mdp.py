"""Shared RL plumbing: experience tuples, returns, seeding, environment base."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates an operation's precondition."""


class StepOutcome(NamedTuple):
    s_next: Any
    reward: float
    terminal: bool


@dataclass(frozen=True)
class Experience:
    s: Any
    a: Any
    r: float
    s_next: Any
    terminal: bool = False

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValidationError(f"non-finite reward {self.r!r}")


@dataclass
class Trajectory:
    steps: list[Experience] = field(default_factory=list)
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must lie in (0, 1], got {self.gamma}")
        for exp in self.steps[:-1]:
            if exp.terminal:
                raise ValidationError("terminal step must be the last step")

    def append(self, exp: Experience) -> None:
        if self.steps and self.steps[-1].terminal:
            raise ValidationError("trajectory already terminated")
        self.steps.append(exp)

    @property
    def rewards(self) -> list[float]:
        return [e.r for e in self.steps]

    def discounted_return(self) -> float:
        return discounted_return(self.rewards, self.gamma)


@dataclass
class RunRecord:
    """Per-episode metrics of one training run."""

    episode: int
    seed: int
    scheme: str
    ret: float
    steps: int
    success: bool


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of ``gamma**t * rewards[t]``.

    ``gamma == 0`` is accepted and keeps only the first reward.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    discount = 1.0
    for r in rewards:
        r = float(r)
        if not math.isfinite(r):
            raise ValidationError(f"non-finite reward {r!r}")
        total += discount * r
        discount *= gamma
    return total


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def make_rng(seed: int, *stream: int | str) -> np.random.Generator:
    """Independent PCG64 stream for ``seed`` and a stream path.

    ``make_rng(3, "gridworld", "look_back_pba")`` and ``make_rng(3, "gridworld", "none")``
    never share state; strings are hashed to stable integers.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(_key(p) for p in stream))
    return np.random.Generator(np.random.PCG64(ss))


class Environment:
    """Minimal episodic environment.

    Discrete environments set ``observation_count``/``action_count``; continuous
    ones set ``observation_low``/``observation_high`` and ``action_low``/``action_high``.
    Instances hold the current state and are not meant to be shared between runs.
    """

    discrete: bool = True
    max_steps: int = 1

    def reset(self, rng: np.random.Generator):
        raise NotImplementedError

    def step(self, action, rng: np.random.Generator) -> StepOutcome:
        raise NotImplementedError


def env_reset(env: Environment, rng: np.random.Generator):
    return env.reset(rng)
