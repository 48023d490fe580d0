"""Acceptance checks evaluated on experiment results.

Each check kind reads its options from the config's ``[[checks]]`` entry.
Frequencies are compared with a margin of ``n_se`` binomial standard errors
(default 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import InvalidInput
from .config import CheckSpec
from .experiments import tail_bound, reference_rate


@dataclass
class CheckResult:
    label: str
    kind: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"label": self.label, "kind": self.kind, "passed": self.passed, "detail": self.detail,
                "values": self.values}

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.label}: {self.detail}"


CHECKS: dict[str, Callable] = {}


def _check(kind: str):
    def deco(fn):
        CHECKS[kind] = fn
        return fn

    return deco


def _binomial_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def _selected(spec: CheckSpec, results: dict) -> list:
    if spec.estimator is not None:
        return [results[spec.estimator]]
    return list(results.values())


def _opt(spec: CheckSpec, key: str, default=None):
    if key in spec.options:
        return spec.options[key]
    if default is None:
        raise InvalidInput(f"check {spec.label!r} needs option {key!r}")
    return default


@_check("rate_slope")
def _rate_slope(spec, results):
    """Fitted log-log slope of median error within ``target +- tol``."""
    target, tol = float(_opt(spec, "target")), float(_opt(spec, "tol"))
    out = []
    for res in _selected(spec, results):
        if res.fit is None:
            out.append((False, f"{res.config.estimator}: no fit (medians {res.medians})", {}))
            continue
        ok = abs(res.fit.slope - target) <= tol
        out.append((ok, f"{res.config.estimator} slope {res.fit.slope:+.3f} vs {target:+.2f}+-{tol}",
                    {"slope": res.fit.slope, "r_squared": res.fit.r_squared}))
    return out


@_check("tail_domination")
def _tails(spec, results):
    """Mean exceedance frequency at every t at most ``bound(t) + n_se * stderr``."""
    name, n_se = _opt(spec, "bound"), float(_opt(spec, "n_se", 3.0))
    out = []
    for res in _selected(spec, results):
        cfg = res.config
        batch = int(cfg.fixed.get("batch", 1))
        worst, ok = -math.inf, True
        for v in cfg.sweep_values:
            errs = res.errors_at(v)
            freq = float(errs.mean()) if errs.size else math.nan
            bound = tail_bound(name, float(v), cfg.fixed)
            margin = freq - bound - n_se * _binomial_se(freq, errs.size * batch)
            worst = max(worst, margin)
            ok &= errs.size == cfg.seeds and margin <= 0
        out.append((ok, f"{cfg.estimator}: max(freq - bound - {n_se:g} se) = {worst:.2e} over {len(cfg.sweep_values)} t",
                    {"worst_margin": worst}))
    return out


@_check("frequency_at_least")
def _frequency(spec, results):
    """Fraction of trials with error <= ``threshold`` at least ``target - n_se * stderr``."""
    thr, target = float(_opt(spec, "threshold")), float(_opt(spec, "target"))
    n_se = float(_opt(spec, "n_se", 3.0))
    out = []
    for res in _selected(spec, results):
        for v in res.config.sweep_values:
            errs = res.errors_at(v)
            total = res.config.seeds
            freq = float(np.sum(errs <= thr)) / total
            se = _binomial_se(freq, total)
            ok = freq >= target - n_se * se
            out.append((ok, f"{res.config.estimator}@{res.config.sweep_param}={v}: "
                            f"freq {freq:.4f} vs {target:.3f} - {n_se:g}*{se:.4f}", {"frequency": freq}))
    return out


@_check("max_at_most")
def _max_at_most(spec, results):
    """Every trial error at most ``threshold``; failed trials count as violations."""
    thr = float(_opt(spec, "threshold"))
    out = []
    for res in _selected(spec, results):
        errs = np.array([r.error for r in res.rows if not r.failed], dtype=float)
        worst = float(errs.max()) if errs.size else math.nan
        ok = not res.failures and errs.size > 0 and worst <= thr
        out.append((ok, f"{res.config.estimator}: max {worst:.3e} (threshold {thr:g}), "
                        f"{len(res.failures)} failed trials", {"max": worst}))
    return out


@_check("mean_at_least")
def _mean_at_least(spec, results):
    """Mean error across trials, then ``max`` or ``mean`` across sweep values, at least ``floor - n_se * stderr``."""
    floor, n_se = float(_opt(spec, "floor")), float(_opt(spec, "n_se", 3.0))
    how = _opt(spec, "across", "max")
    out = []
    for res in _selected(spec, results):
        batch = int(res.config.fixed.get("batch", 1))
        per_value = [res.errors_at(v) for v in res.config.sweep_values]
        means = np.array([e.mean() for e in per_value])
        if how == "max":
            i = int(np.argmax(means))
            value, trials = float(means[i]), per_value[i].size * batch
        elif how == "mean":
            value, trials = float(means.mean()), sum(e.size for e in per_value) * batch
        else:
            raise InvalidInput("across must be 'max' or 'mean'")
        se = _binomial_se(value, trials)
        ok = value >= floor - n_se * se
        out.append((ok, f"{res.config.estimator}: {how} error {value:.4f} vs floor {floor:.4f} - {n_se:g}*{se:.4f}",
                    {"value": value, "stderr": se}))
    return out


@_check("median_ratio_at_most")
def _ratio(spec, results):
    """Median of the estimator at most ``multiplier * log(x)`` times the reference's median, at every x."""
    ref = results.get(_opt(spec, "reference"))
    if ref is None:
        raise InvalidInput(f"check {spec.label!r}: reference run missing")
    mult = float(_opt(spec, "multiplier"))
    out = []
    for res in _selected(spec, results):
        if res is ref:
            continue
        ratios = []
        for (x, m), (_, mr) in zip(res.medians, ref.medians):
            ratios.append(m / (mr * mult * math.log(x)))
        worst = max(ratios)
        out.append((worst <= 1.0, f"{res.config.estimator}: max median/({mult:g} log n * reference) = {worst:.3f}",
                    {"ratios": ratios}))
    return out


@_check("monotone_decreasing")
def _monotone(spec, results):
    """Medians strictly decrease along the sweep."""
    out = []
    for res in _selected(spec, results):
        meds = [m for _, m in res.medians]
        ok = all(b < a for a, b in zip(meds, meds[1:]))
        out.append((ok, f"{res.config.estimator}: medians {[round(m, 4) for m in meds]}", {"medians": meds}))
    return out


@_check("below_rate")
def _below_rate(spec, results):
    """Medians at most ``constant * rate(x)``."""
    rate, const = _opt(spec, "rate"), float(_opt(spec, "constant"))
    out = []
    for res in _selected(spec, results):
        ratios = [m / reference_rate(rate, x, res.config.fixed) for x, m in res.medians]
        worst = max(ratios)
        out.append((worst <= const, f"{res.config.estimator}: max median/rate = {worst:.3f} (constant {const:g})",
                    {"ratios": ratios}))
    return out


def evaluate(spec: CheckSpec, results: dict) -> CheckResult:
    fn = CHECKS.get(spec.kind)
    if fn is None:
        raise InvalidInput(f"unknown check kind {spec.kind!r}")
    parts = fn(spec, results)
    passed = bool(parts) and all(ok for ok, _, _ in parts)
    detail = "; ".join(msg for _, msg, _ in parts)
    values = {str(i): v for i, (_, _, v) in enumerate(parts)}
    return CheckResult(spec.label, spec.kind, passed, detail, values)


def evaluate_all(specs, results: dict) -> list:
    return [evaluate(s, results) for s in specs]
