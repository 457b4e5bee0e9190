"""JSON experiment configuration.

A config file looks like::

    {
      "domain": "gridworld",
      "schemes": ["none", "pbrs", "look_ahead_pba", "look_back_pba"],
      "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
      "episodes": 300,
      "env": {"p_jump": 0.2},
      "agent": {"alpha_theta": 0.2, "alpha_omega": 0.001, "gamma": 1.0, "theta_bound": 3.0},
      "potential": {"u0": 0.0, "u1": 5.0, "kappa": 5.0},
      "smoothing_window": 10
    }

Every section is optional except ``domain``. Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..envs import CarConfig, GridConfig
from ..mdp import ValidationError
from ..shaping import MODES

DOMAINS = ("gridworld", "mountain_car")


class ConfigError(ValueError):
    """A config field is missing, unknown or out of range; ``field`` names it."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


AGENT_DEFAULTS = {
    "gridworld": {"alpha_theta": 0.2, "alpha_omega": 0.001, "gamma": 1.0, "entropy_bonus": 0.0,
                  "theta_bound": 3.0, "printed_critic_sign": False},
    "mountain_car": {"alpha_theta": 1e-5, "alpha_omega": 5.6e-4, "gamma": 0.99, "entropy_bonus": 0.0,
                     "hidden": [64, 64], "printed_critic_sign": False, "eval_rollouts": 10},
}
POTENTIAL_DEFAULTS = {"u0": 0.0, "u1": 5.0, "kappa": 5.0}
TOP_LEVEL = {"domain", "schemes", "seeds", "episodes", "env", "agent", "potential", "smoothing_window"}


@dataclass
class ExperimentConfig:
    domain: str
    schemes: list[str] = field(default_factory=lambda: list(MODES))
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    episodes: int = 300
    env: dict[str, Any] = field(default_factory=dict)
    agent: dict[str, Any] = field(default_factory=dict)
    potential: dict[str, float] = field(default_factory=dict)
    smoothing_window: int = 10

    def __post_init__(self):
        validate(self)

    def env_config(self) -> GridConfig | CarConfig:
        cls = GridConfig if self.domain == "gridworld" else CarConfig
        return cls(**self.env)

    def agent_params(self) -> dict[str, Any]:
        return {**AGENT_DEFAULTS[self.domain], **self.agent}

    def potential_params(self) -> dict[str, float]:
        return {**POTENTIAL_DEFAULTS, **self.potential}

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _unknown(section: str, given: dict, allowed) -> None:
    for key in given:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}" if section else key, "unknown key")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.domain not in DOMAINS:
        raise ConfigError("domain", f"must be one of {DOMAINS}, got {cfg.domain!r}")
    if not isinstance(cfg.schemes, list) or not cfg.schemes:
        raise ConfigError("schemes", "must be a non-empty list")
    for s in cfg.schemes:
        if s not in MODES:
            raise ConfigError("schemes", f"unknown scheme {s!r}; expected one of {MODES}")
    if len(set(cfg.schemes)) != len(cfg.schemes):
        raise ConfigError("schemes", "duplicate entries")
    if not isinstance(cfg.seeds, list) or not cfg.seeds:
        raise ConfigError("seeds", "must be a non-empty list")
    if not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in cfg.seeds):
        raise ConfigError("seeds", "must be non-negative integers")
    if not isinstance(cfg.episodes, int) or cfg.episodes < 0:
        raise ConfigError("episodes", "must be a non-negative integer")
    if not isinstance(cfg.smoothing_window, int) or cfg.smoothing_window < 1:
        raise ConfigError("smoothing_window", "must be a positive integer")
    for name in ("env", "agent", "potential"):
        if not isinstance(getattr(cfg, name), dict):
            raise ConfigError(name, "must be an object")
    env_cls = GridConfig if cfg.domain == "gridworld" else CarConfig
    _unknown("env", cfg.env, {f.name for f in dataclasses.fields(env_cls)})
    _unknown("agent", cfg.agent, AGENT_DEFAULTS[cfg.domain])
    _unknown("potential", cfg.potential, POTENTIAL_DEFAULTS)
    try:
        env_cls(**cfg.env)
    except (ValidationError, TypeError) as exc:
        raise ConfigError("env", str(exc)) from exc
    agent = cfg.agent_params()
    for key in ("alpha_theta", "alpha_omega"):
        if not isinstance(agent[key], (int, float)) or agent[key] <= 0:
            raise ConfigError(f"agent.{key}", "must be a positive number")
    if not 0.0 < agent["gamma"] <= 1.0:
        raise ConfigError("agent.gamma", "must lie in (0, 1]")
    if agent.get("theta_bound") is not None and agent["theta_bound"] <= 0:
        raise ConfigError("agent.theta_bound", "must be positive or null")
    pot = cfg.potential_params()
    if not pot["u1"] > pot["u0"]:
        raise ConfigError("potential.u1", "must exceed potential.u0")
    if not pot["kappa"] > 0:
        raise ConfigError("potential.kappa", "must be positive")


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    _unknown("", data, TOP_LEVEL)
    if "domain" not in data:
        raise ConfigError("domain", "missing")
    return ExperimentConfig(**data)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)
