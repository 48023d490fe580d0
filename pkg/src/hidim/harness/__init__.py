"""Seeded Monte Carlo harness: configs, trial registry, rate fits, checks and reports."""

from .checks import CheckResult, evaluate_all
from .config import ConfigFile, ExperimentConfig, load_config, parse_config
from .fitting import RateFit, fit_loglog_slope
from .report import CSV_HEADER, TrialRow, emit_csv, emit_json, read_csv
from .runner import ExperimentResult, run_config, run_experiment

__all__ = [
    "CSV_HEADER",
    "CheckResult",
    "ConfigFile",
    "ExperimentConfig",
    "ExperimentResult",
    "RateFit",
    "TrialRow",
    "emit_csv",
    "emit_json",
    "evaluate_all",
    "fit_loglog_slope",
    "load_config",
    "parse_config",
    "read_csv",
    "run_config",
    "run_experiment",
]
