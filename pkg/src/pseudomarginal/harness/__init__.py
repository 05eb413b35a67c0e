"""Experiment configuration, orchestration, persistence and the command line."""

from .config import ConfigError, ExperimentConfig, config_from_dict, expand_grid, load_config, load_grid
from .experiments import make_rng, run_comparison_suite, run_experiment, run_trace, summarize

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "config_from_dict",
    "expand_grid",
    "load_config",
    "load_grid",
    "make_rng",
    "run_comparison_suite",
    "run_experiment",
    "run_trace",
    "summarize",
]
