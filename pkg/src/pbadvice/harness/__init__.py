"""Experiment configuration, execution, output and property checks."""
from .config import ConfigError, ExperimentConfig, load_config
from .records import emit_csv, read_csv
from .runner import aggregate_curves, run_experiment, sweep_pj

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "emit_csv", "read_csv",
           "aggregate_curves", "run_experiment", "sweep_pj"]
