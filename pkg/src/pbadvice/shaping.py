"""Potential functions and shaping bonuses (PBRS, look-ahead and look-back advice)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .envs import (ACTION_NAMES, GridConfig, GridState, grid_observe,
                   grid_observation_count, grid_states, grid_successor)
from .mdp import ValidationError

NONE = "none"
PBRS = "pbrs"
LOOK_AHEAD = "look_ahead_pba"
LOOK_BACK = "look_back_pba"
MODES = (NONE, PBRS, LOOK_AHEAD, LOOK_BACK)


@dataclass(frozen=True)
class PotentialScheme:
    """A shaping mode plus the potential it needs.

    ``phi_s`` takes an observation (``pbrs``); ``phi_sa`` takes an observation
    and an action (both advice modes). Mode ``none`` carries neither.
    """

    mode: str = NONE
    phi_s: Optional[Callable[[Any], float]] = None
    phi_sa: Optional[Callable[[Any, Any], float]] = None
    terminal_potential_zero: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown shaping mode {self.mode!r}; expected one of {MODES}")
        want_s = self.mode == PBRS
        want_sa = self.mode in (LOOK_AHEAD, LOOK_BACK)
        if want_s != (self.phi_s is not None):
            raise ValidationError(f"mode {self.mode!r} {'requires' if want_s else 'forbids'} phi_s")
        if want_sa != (self.phi_sa is not None):
            raise ValidationError(f"mode {self.mode!r} {'requires' if want_sa else 'forbids'} phi_sa")

    @property
    def is_advice(self) -> bool:
        return self.mode in (LOOK_AHEAD, LOOK_BACK)


def _finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"potential evaluated to non-finite value {x!r}")
    return x


def _require(scheme: PotentialScheme, mode: str) -> None:
    if scheme.mode != mode:
        raise ValidationError(f"scheme mode is {scheme.mode!r}, operation needs {mode!r}")


def pbrs_bonus(scheme: PotentialScheme, s, s_next, terminal: bool, gamma: float) -> float:
    """``gamma * phi(s') - phi(s)``, with ``phi(s') = 0`` on terminal transitions."""
    _require(scheme, PBRS)
    nxt = 0.0 if terminal and scheme.terminal_potential_zero else _finite(scheme.phi_s(s_next))
    return gamma * nxt - _finite(scheme.phi_s(s))


def look_ahead_bonus(scheme: PotentialScheme, s, a, s_next, a_next, terminal: bool, gamma: float) -> float:
    _require(scheme, LOOK_AHEAD)
    if terminal and scheme.terminal_potential_zero:
        nxt = 0.0
    else:
        if a_next is None:
            raise ValidationError("look-ahead advice needs the next action on non-terminal steps")
        nxt = _finite(scheme.phi_sa(s_next, a_next))
    return gamma * nxt - _finite(scheme.phi_sa(s, a))


def look_back_bonus(scheme: PotentialScheme, s, a, s_prev, a_prev, is_first_step: bool, gamma: float) -> float:
    """``phi(s, a) - phi(s_prev, a_prev) / gamma``; the second term is 0 on the first step."""
    _require(scheme, LOOK_BACK)
    if gamma == 0:
        raise ValidationError("look-back advice is undefined for gamma = 0")
    back = 0.0 if is_first_step else _finite(scheme.phi_sa(s_prev, a_prev)) / gamma
    return _finite(scheme.phi_sa(s, a)) - back


# Gridworld potentials.

def grid_pbrs_potential(s: GridState, u0: float = 0.0, u1: float = 5.0) -> float:
    if not u1 > u0:
        raise ValidationError(f"need u1 > u0 to reward crossing the puddle, got u0={u0}, u1={u1}")
    return u0 if s.y in (0, 1) else u1


def _l1_to_goal(s: GridState, cfg: GridConfig) -> int:
    g = cfg.goal
    return abs(g.x - s.x) + abs(g.y - s.y)


def grid_closer(s: GridState, a: int, cfg: GridConfig) -> int:
    """1 if the intended successor of ``a`` is strictly closer to the goal in l1."""
    return int(_l1_to_goal(grid_successor(s, a, cfg, jumped=True), cfg) < _l1_to_goal(s, cfg))


def grid_pba_potential(s: GridState, a: int, u0: float = 0.0, u1: float = 5.0,
                       kappa: float = 5.0, cfg: GridConfig | None = None) -> float:
    if not kappa > 0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    cfg = cfg or GridConfig()
    h = [grid_closer(s, b, cfg) for b in range(len(ACTION_NAMES))]
    return grid_pbrs_potential(s, u0, u1) + kappa * (h[a] - sum(h) / len(h))


def grid_potential_tables(u0: float = 0.0, u1: float = 5.0, kappa: float = 5.0,
                          cfg: GridConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Observation-level potentials ``(phi_s[obs], phi_sa[obs, a])``.

    An aliased observation gets the mean potential of the cells behind it, so
    the agent's advice only depends on what it can see.
    """
    cfg = cfg or GridConfig()
    n_obs = grid_observation_count(cfg.size)
    phi_s = np.zeros(n_obs)
    phi_sa = np.zeros((n_obs, len(ACTION_NAMES)))
    counts = np.zeros(n_obs)
    for s in grid_states(cfg.size):
        o = grid_observe(s, cfg.size)
        counts[o] += 1
        phi_s[o] += grid_pbrs_potential(s, u0, u1)
        phi_sa[o] += [grid_pba_potential(s, a, u0, u1, kappa, cfg) for a in range(len(ACTION_NAMES))]
    phi_s /= counts
    phi_sa /= counts[:, None]
    return phi_s, phi_sa


def table_scheme(mode: str, phi_s: np.ndarray | None = None, phi_sa: np.ndarray | None = None,
                 terminal_potential_zero: bool = True) -> PotentialScheme:
    """Scheme backed by lookup tables indexed by observation id."""
    return PotentialScheme(
        mode=mode,
        phi_s=(lambda s: phi_s[s]) if mode == PBRS else None,
        phi_sa=(lambda s, a: phi_sa[s, a]) if mode in (LOOK_AHEAD, LOOK_BACK) else None,
        terminal_potential_zero=terminal_potential_zero,
    )


def grid_scheme(mode: str, u0: float = 0.0, u1: float = 5.0, kappa: float = 5.0,
                cfg: GridConfig | None = None, terminal_potential_zero: bool = True) -> PotentialScheme:
    phi_s, phi_sa = grid_potential_tables(u0, u1, kappa, cfg)
    return table_scheme(mode, phi_s, phi_sa, terminal_potential_zero)


# Mountain car potentials.

def car_pbrs_potential(s) -> float:
    return float(s[0]) + 2.0


def car_pba_potential(s, a) -> float:
    return 1.0 if float(a) * float(s[1]) > 0.0 else 0.0


def car_scheme(mode: str, terminal_potential_zero: bool = True) -> PotentialScheme:
    return PotentialScheme(
        mode=mode,
        phi_s=car_pbrs_potential if mode == PBRS else None,
        phi_sa=car_pba_potential if mode in (LOOK_AHEAD, LOOK_BACK) else None,
        terminal_potential_zero=terminal_potential_zero,
    )

