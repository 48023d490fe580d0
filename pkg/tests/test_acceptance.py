"""Acceptance criteria, one test per criterion, run from the shipped configs.

Each test runs its configs at their full settings, evaluates every check and
records one PASS/FAIL line that the terminal summary prints (see conftest).
"""

import time
from pathlib import Path

import pytest

from hidim.harness.checks import evaluate_all
from hidim.harness.config import load_config
from hidim.harness.runner import run_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

CRITERIA = {
    1: ("tail domination, Hoeffding", ["tails"]),
    2: ("tail domination, matrix Bernstein", ["matrix_bernstein"]),
    3: ("hard-threshold support recovery", ["hard_threshold"]),
    4: ("rate slopes: least squares, Lasso in n and k, l1 ball",
        ["rates_least_squares", "rates_lasso_n", "rates_lasso_k", "rates_l1_ball"]),
    5: ("SLOPE solver and sorted-l1 prox against oracles", ["slope_oracle"]),
    6: ("SVT and rank-penalized error bounds", ["svt"]),
    7: ("nonparametric rates and adaptivity", ["nonparam_beta1", "nonparam_beta2"]),
    8: ("minimax floors, two-point and Fano", ["minimax_two_point", "minimax_fano"]),
    9: ("sparse PCA error", ["sparse_pca"]),
    10: ("graphical lasso and Ising checks", ["graphical_checks", "ising_rate"]),
    11: ("oracle equivalences", ["oracle_equivalences"]),
}

RESULTS: dict = {}


def run_criterion(number):
    lines, ok = [], True
    start = time.perf_counter()
    for name in CRITERIA[number][1]:
        cfg = load_config(CONFIGS / f"{name}.toml")
        assert cfg.criterion == number
        for c in evaluate_all(cfg.checks, run_config(cfg)):
            ok &= c.passed
            lines.append(f"    {name}: {c.line()}")
    return ok, lines, time.perf_counter() - start


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, lines, seconds = run_criterion(number)
    RESULTS[number] = (ok, CRITERIA[number][0], lines, seconds)
    assert ok, "\n".join(lines)
