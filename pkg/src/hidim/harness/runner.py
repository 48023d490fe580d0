"""Monte Carlo orchestration."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import __version__
from ..datagen import RandomSource, stream_id
from ..errors import InvalidInput
from .config import ConfigFile, ExperimentConfig
from .experiments import lookup
from .fitting import RateFit, fit_loglog_slope
from .report import TrialRow


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    fit: Optional[RateFit]
    medians: list = field(default_factory=list)

    def errors_at(self, value) -> np.ndarray:
        """Successful trial errors at one sweep value, in seed order."""
        return np.array([r.error for r in self.rows if r.sweep_value == value and not r.failed], dtype=float)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.failed]

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "fit": self.fit.to_dict() if self.fit else None,
            "medians": [list(m) for m in self.medians],
            "failures": [
                {"sweep_value": r.sweep_value, "seed": r.seed, "code": r.error} for r in self.failures
            ],
        }


def trial_source(config: ExperimentConfig, value_index: int, trial: int) -> RandomSource:
    """Stream of one trial, fixed by ``(value index, trial index)``."""
    return RandomSource(config.master_seed, stream_id(value_index, trial))


def run_experiment(config: ExperimentConfig, threads: int = 1, record_runtime: bool = False) -> ExperimentResult:
    """Run ``seeds`` trials at every sweep value and fit median error against the swept value.

    A trial that raises is recorded with the exception's class name instead
    of an error value and the run continues. Results are assembled in
    (value, trial) order, so the output does not depend on ``threads``.
    Runtimes are recorded only on request because they would make the
    output irreproducible.
    """
    est = lookup(config.estimator)
    if est.experiment != config.experiment:
        raise InvalidInput(
            f"estimator {config.estimator!r} belongs to experiment {est.experiment!r}, not {config.experiment!r}"
        )
    if threads < 1:
        raise InvalidInput("threads must be at least 1")
    tasks = [(vi, v, s) for vi, v in enumerate(config.sweep_values) for s in range(config.seeds)]

    def run_one(task):
        vi, v, s = task
        params = dict(config.fixed)
        params[config.sweep_param] = v
        params["master_seed"] = config.master_seed
        start = time.perf_counter()
        try:
            err = float(est.trial(params, trial_source(config, vi, s)))
        except Exception as exc:  # recorded per row; the sweep goes on
            err = type(exc).__name__
        ms = (time.perf_counter() - start) * 1e3 if record_runtime else None
        return TrialRow(config.experiment, config.estimator, config.sweep_param, v, s, err, ms)

    if threads == 1:
        rows = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, tasks))

    medians = []
    for v in config.sweep_values:
        errs = [r.error for r in rows if r.sweep_value == v and not r.failed]
        medians.append((v, float(np.median(errs)) if errs else float("nan")))
    fit = None
    if len(medians) >= 3 and all(x > 0 and np.isfinite(m) and m > 0 for x, m in medians):
        fit = fit_loglog_slope(medians)
    return ExperimentResult(config, rows, fit, medians)


def run_config(cfg: ConfigFile, threads: int = 1, record_runtime: bool = False) -> dict:
    """Run every experiment of a config file; results keyed by estimator name."""
    return {run.estimator: run_experiment(run, threads, record_runtime) for run in cfg.runs}


def file_summary(cfg: ConfigFile, results: dict, checks: list) -> dict:
    return {
        "name": cfg.name,
        "criterion": cfg.criterion,
        "description": cfg.description,
        "version": __version__,
        "runs": {name: res.summary() for name, res in results.items()},
        "checks": [c.to_dict() for c in checks],
    }
