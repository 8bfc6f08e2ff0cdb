"""Experiment harness: config parsing, orchestration and the CLI."""

from .config import ALL_VARIANTS, ConfigError, ExperimentConfig, NetworkConfig, load_config, parse_config_text
from .runner import RunRecord, run_experiment, summarize, sweep_dag_params

__all__ = ["ALL_VARIANTS", "ConfigError", "ExperimentConfig", "NetworkConfig", "RunRecord", "load_config",
           "parse_config_text", "run_experiment", "summarize", "sweep_dag_params"]
