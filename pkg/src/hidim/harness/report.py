"""CSV and JSON output. Floats are written with ``repr`` so files are reproducible bytewise."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..errors import IOFailure

CSV_HEADER = ("experiment", "estimator", "sweep_param", "sweep_value", "seed", "error", "runtime_ms")
FAILURE_PREFIX = "!"


@dataclass(frozen=True)
class TrialRow:
    """One trial. ``error`` is a float, or a string naming the exception when the trial failed."""

    experiment: str
    estimator: str
    sweep_param: str
    sweep_value: float
    seed: int
    error: Union[float, str]
    runtime_ms: Optional[float] = None

    @property
    def failed(self) -> bool:
        return isinstance(self.error, str)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write(path, text: str) -> None:
    p = Path(path)
    try:
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {p}: {exc}") from exc


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        err = FAILURE_PREFIX + r.error if r.failed else _fmt(float(r.error))
        w.writerow([r.experiment, r.estimator, r.sweep_param, _fmt(r.sweep_value), r.seed, err, _fmt(r.runtime_ms)])
    return buf.getvalue()


def emit_csv(rows, path) -> None:
    _write(path, csv_text(rows))


def _number(s: str) -> Union[int, float]:
    v = float(s)
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v


def read_csv(path) -> list[TrialRow]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    if tuple(header) != CSV_HEADER:
        raise IOFailure(f"unexpected header {header}")
    out = []
    for exp, est, param, value, seed, err, rt in rows:
        error = err[len(FAILURE_PREFIX):] if err.startswith(FAILURE_PREFIX) else float(err)
        out.append(TrialRow(exp, est, param, _number(value), int(seed), error, float(rt) if rt else None))
    return out


def _clean(obj):
    # JSON has no NaN or infinity; write them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def json_text(summary: dict) -> str:
    return json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n"


def emit_json(summary: dict, path) -> None:
    _write(path, json_text(summary))
