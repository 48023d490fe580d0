"""Experiment configuration files (TOML, or JSON with the same layout).

A file holds shared top-level settings, an optional ``[[runs]]`` array whose
entries override them (one :class:`ExperimentConfig` per entry), and an
optional ``[[checks]]`` array evaluated on the results::

    name = "tails"
    experiment = "tails"
    master_seed = 1
    seeds = 100
    [sweep]
    param = "t"
    values = [0.05, 0.1]
    [fixed]
    n = 50
    [[runs]]
    estimator = "mean_gaussian"
    [[checks]]
    kind = "tail_domination"
    bound = "hoeffding"
"""

from __future__ import annotations

import copy
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from ..errors import InvalidInput

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("rates", "tails", "minimax", "pca", "ising", "glasso", "nonparam")
MIN_SEEDS = 50


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    estimator: str
    sweep_param: str
    sweep_values: tuple
    fixed: dict = field(default_factory=dict)
    seeds: int = 100
    master_seed: int = 0
    output_path: Optional[str] = None
    name: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInput(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.estimator:
            raise InvalidInput("estimator name is required")
        if not self.sweep_param:
            raise InvalidInput("sweep parameter name is required")
        values = tuple(self.sweep_values)
        if not values:
            raise InvalidInput("sweep needs at least one value")
        if any(not isinstance(v, (int, float)) or isinstance(v, bool) for v in values):
            raise InvalidInput("sweep values must be numbers")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidInput("sweep values must be strictly increasing")
        object.__setattr__(self, "sweep_values", values)
        if not isinstance(self.seeds, int) or self.seeds < MIN_SEEDS:
            raise InvalidInput(f"seeds must be an integer >= {MIN_SEEDS}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise InvalidInput("master_seed must be a 64-bit non-negative integer")
        if self.sweep_param in self.fixed:
            raise InvalidInput(f"{self.sweep_param!r} is both swept and fixed")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep_values"] = list(self.sweep_values)
        return d


@dataclass(frozen=True)
class CheckSpec:
    """One acceptance check; ``options`` holds the kind-specific keys."""

    kind: str
    label: str
    estimator: Optional[str] = None
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConfigFile:
    name: str
    runs: tuple
    checks: tuple = ()
    criterion: Optional[int] = None
    description: str = ""
    path: Optional[str] = None


_RUN_KEYS = {"experiment", "estimator", "sweep", "fixed", "seeds", "master_seed", "output_path"}
_TOP_KEYS = _RUN_KEYS | {"name", "runs", "checks", "criterion", "description"}


def _read(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return json.loads(raw)
        return tomllib.loads(raw.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise InvalidInput(f"cannot parse {path}: {exc}") from exc


def _build_run(base: dict, override: dict, name: str) -> ExperimentConfig:
    unknown = set(override) - _RUN_KEYS
    if unknown:
        raise InvalidInput(f"unknown run keys {sorted(unknown)}")
    merged = copy.deepcopy(base)
    for key, val in override.items():
        if key == "fixed":
            merged.setdefault("fixed", {}).update(val)
        else:
            merged[key] = val
    sweep = merged.get("sweep")
    if not isinstance(sweep, dict) or "param" not in sweep or "values" not in sweep:
        raise InvalidInput("each run needs sweep.param and sweep.values")
    try:
        return ExperimentConfig(
            experiment=merged.get("experiment", ""),
            estimator=merged.get("estimator", ""),
            sweep_param=sweep["param"],
            sweep_values=tuple(sweep["values"]),
            fixed=dict(merged.get("fixed", {})),
            seeds=merged.get("seeds", 100),
            master_seed=merged.get("master_seed", 0),
            output_path=merged.get("output_path"),
            name=name,
        )
    except TypeError as exc:
        raise InvalidInput(str(exc)) from exc


def parse_config(data: dict, name: str = "config", path: Optional[str] = None) -> ConfigFile:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise InvalidInput(f"unknown config keys {sorted(unknown)}")
    name = data.get("name", name)
    base = {k: v for k, v in data.items() if k in _RUN_KEYS}
    overrides = data.get("runs") or [{}]
    runs = tuple(_build_run(base, o, name) for o in overrides)
    checks = []
    for i, c in enumerate(data.get("checks", [])):
        c = dict(c)
        kind = c.pop("kind", None)
        if not kind:
            raise InvalidInput(f"check {i} has no kind")
        label = c.pop("label", f"{name}:{kind}")
        est = c.pop("estimator", None)
        if est is not None and est not in {r.estimator for r in runs}:
            raise InvalidInput(f"check {label!r} refers to unknown estimator {est!r}")
        checks.append(CheckSpec(kind, label, est, c))
    return ConfigFile(name, runs, tuple(checks), data.get("criterion"), data.get("description", ""), path)


def load_config(path) -> ConfigFile:
    path = Path(path)
    return parse_config(_read(path), name=path.stem, path=str(path))


def apply_overrides(cfg: ConfigFile, seeds: Optional[int] = None, master_seed: Optional[int] = None,
                    output_path: Optional[str] = None) -> ConfigFile:
    """Command-line values replace the file's ``seeds``, ``master_seed`` and ``output_path``."""
    changes: dict[str, Any] = {}
    if seeds is not None:
        changes["seeds"] = seeds
    if master_seed is not None:
        changes["master_seed"] = master_seed
    if output_path is not None:
        changes["output_path"] = output_path
    if not changes:
        return cfg
    return replace(cfg, runs=tuple(replace(r, **changes) for r in cfg.runs))


def discover_configs(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise InvalidInput(f"config directory {d} does not exist")
    return sorted(p for p in d.iterdir() if p.suffix in (".toml", ".json"))
