"""Benchmark harness: experiment configs, runners, result sink and CLI."""

from .config import DEFAULTS, EXPERIMENTS, ExperimentConfig, load_config, make_config
from .experiments import RUNNERS, ExperimentResult, run_experiment
from .sink import RESULT_COLUMNS, SCHEMA_VERSION, ResultRow, ResultSink

__all__ = [
    "DEFAULTS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "RESULT_COLUMNS",
    "RUNNERS",
    "ResultRow",
    "ResultSink",
    "SCHEMA_VERSION",
    "load_config",
    "make_config",
    "run_experiment",
]
