"""Tail bounds, Monte Carlo exceedance, epsilon-nets, median-of-means and JL checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .datagen import RandomSource, RngLike, as_generator
from .errors import InvalidInput
from .linalg import as_vector

MATRIX_BERNSTEIN_FORMS = ("bennett", "bernstein", "split")


def hoeffding_bound(n: int, ranges, t: float) -> float:
    """``exp(-2 n^2 t^2 / sum (b_i - a_i)^2)`` for the deviation of a mean of ``n`` bounded terms.

    ``ranges`` holds one ``(a_i, b_i)`` pair per term; a single pair is
    broadcast to all ``n`` terms.
    """
    r = np.asarray(ranges, dtype=float).reshape(-1, 2) if len(ranges) else np.zeros((0, 2))
    if r.shape[0] == 0:
        raise InvalidInput("ranges must not be empty")
    if np.any(r[:, 1] < r[:, 0]):
        raise InvalidInput("each range needs b_i >= a_i")
    if t < 0:
        raise InvalidInput("t must be non-negative")
    if r.shape[0] not in (1, n):
        raise InvalidInput(f"expected 1 or {n} ranges, got {r.shape[0]}")
    widths = (r[:, 1] - r[:, 0]) ** 2
    total = widths.sum() * (n if r.shape[0] == 1 else 1)
    if t == 0:
        return 1.0
    if total == 0:
        return 0.0
    return float(min(1.0, math.exp(-2.0 * n * n * t * t / total)))


def bernstein_bound(n: int, lam: float, t: float) -> float:
    """``exp(-(n/2) min(t^2/lam^2, t/lam))`` for a mean of ``n`` sub-exponential(lam) terms."""
    if lam <= 0:
        raise InvalidInput("lambda must be positive")
    if t < 0:
        raise InvalidInput("t must be non-negative")
    return math.exp(-0.5 * n * min(t * t / (lam * lam), t / lam))


def max_subgaussian_bound(n_vars: int, sigma: float, absolute: bool = False) -> float:
    """Bound on ``E max_i X_i`` (or ``E max_i |X_i|``) over ``n_vars`` subG(sigma^2) variables."""
    if n_vars < 1:
        raise InvalidInput("need at least one variable")
    count = 2 * n_vars if absolute else n_vars
    return sigma * math.sqrt(2.0 * math.log(count))


def chi2_upper_quantile(n: int, delta: float) -> float:
    """``n + 2 sqrt(n log(1/delta)) + 2 log(1/delta)``, exceeded by chi2_n w.p. at most delta."""
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    L = math.log(1.0 / delta)
    return n + 2.0 * math.sqrt(n * L) + 2.0 * L


def bennett_h(u):
    """``h(u) = (1+u) log(1+u) - u``."""
    u = np.asarray(u, dtype=float)
    return (1.0 + u) * np.log1p(u) - u


def matrix_bernstein_bound(d: int, variance: float, r_bound: float, t: float, form: str = "bernstein") -> float:
    """Tail bound on ``lambda_max(sum X_i) >= t`` for centered ``d x d`` summands.

    ``variance`` is ``|| sum E X_i^2 ||_op`` and ``r_bound`` bounds
    ``lambda_max(X_i)``. The three forms are successively looser.
    """
    if form not in MATRIX_BERNSTEIN_FORMS:
        raise InvalidInput(f"form must be one of {MATRIX_BERNSTEIN_FORMS}")
    if variance <= 0 or r_bound <= 0:
        raise InvalidInput("variance and r_bound must be positive")
    if t < 0:
        raise InvalidInput("t must be non-negative")
    s2, R = variance, r_bound
    if form == "bennett":
        return float(d * math.exp(-(s2 / R**2) * float(bennett_h(R * t / s2))))
    if form == "bernstein":
        return float(d * math.exp(-(t * t / 2.0) / (s2 + R * t / 3.0)))
    if t <= s2 / R:
        return float(d * math.exp(-3.0 * t * t / (8.0 * s2)))
    return float(d * math.exp(-3.0 * t / (8.0 * R)))


def _uniform_in_ball(g: np.random.Generator, dim: int, size: int) -> np.ndarray:
    z = g.standard_normal((size, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * g.uniform(size=(size, 1)) ** (1.0 / dim)


def epsilon_net_ball(dim: int, eps: float, sample_budget: int = 10_000, rng: RngLike = RandomSource(0)) -> list[np.ndarray]:
    """Greedy eps-packing of the unit ball, starting from the origin.

    Random candidates are accepted when farther than ``eps`` from every
    accepted point; the loop stops after ``sample_budget`` consecutive
    rejections. The result is a maximal packing with high probability, and
    hence a ``2 eps`` covering.
    """
    if not 0 < eps < 1:
        raise InvalidInput("eps must lie in (0, 1)")
    if dim < 1:
        raise InvalidInput("dim must be positive")
    g = as_generator(rng)
    pts = np.zeros((1, dim))
    rejected = 0
    batch = 256
    while rejected < sample_budget:
        cand = _uniform_in_ball(g, dim, batch)
        for c in cand:
            if np.min(np.sum((pts - c) ** 2, axis=1)) > eps * eps:
                pts = np.vstack([pts, c])
                rejected = 0
            else:
                rejected += 1
                if rejected >= sample_budget:
                    break
    return [p.copy() for p in pts]


def median_of_means(samples, groups: int) -> float:
    x = as_vector(samples, "samples")
    if groups < 1 or x.size % groups:
        raise InvalidInput(f"{x.size} samples cannot be split into {groups} equal groups")
    means = x.reshape(groups, -1).mean(axis=1)
    return float(np.median(means))


@dataclass(frozen=True)
class JLReport:
    violations: int
    total_pairs: int


def random_rotation(dim: int, rng: RngLike) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    g = as_generator(rng)
    q, r = np.linalg.qr(g.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def jl_isometry_check(points: Sequence, k: int, eps: float, rng: RngLike) -> JLReport:
    """Count pairs whose squared distance is not preserved within ``1 +- eps``.

    The map is ``sqrt(d/k)`` times the projection onto the first ``k``
    coordinates after a Haar rotation.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise InvalidInput("points must be a list of equal-length vectors")
    npts, d = x.shape
    if not 1 <= k <= d:
        raise InvalidInput(f"need 1 <= k <= d, got k={k}, d={d}")
    if eps < 0:
        raise InvalidInput("eps must be non-negative")
    rot = random_rotation(d, rng)
    proj = math.sqrt(d / k) * (x @ rot.T)[:, :k]
    i, j = np.triu_indices(npts, 1)
    orig = np.sum((x[i] - x[j]) ** 2, axis=1)
    new = np.sum((proj[i] - proj[j]) ** 2, axis=1)
    slack = 1e-12 * orig
    bad = (new < (1 - eps) * orig - slack) | (new > (1 + eps) * orig + slack)
    return JLReport(int(np.count_nonzero(bad)), int(i.size))


def jl_dimension(npoints: int, eps: float, constant: float = 24.0) -> int:
    """``ceil(C log(n) / eps^2)``; the constant is a tunable, not a derived value."""
    return int(math.ceil(constant * math.log(npoints) / eps**2))


@dataclass
class TailComparison:
    t_grid: np.ndarray
    empirical_freq: np.ndarray
    theoretical_bound: np.ndarray
    trials: int

    @property
    def stderr(self) -> np.ndarray:
        p = self.empirical_freq
        return np.sqrt(p * (1 - p) / self.trials)

    def dominated(self, n_se: float = 3.0) -> np.ndarray:
        """Pointwise ``empirical <= bound + n_se * stderr``."""
        return self.empirical_freq <= self.theoretical_bound + n_se * self.stderr


def empirical_exceedance(
    statistic: Callable[[np.random.Generator], float],
    t_grid,
    trials: int,
    rng: RandomSource,
    bound: Callable[[float], float] | None = None,
) -> TailComparison:
    """Fraction of ``trials`` draws of ``statistic`` strictly above each ``t``.

    Trial ``i`` draws from ``rng.child(i)``, so the result does not depend on
    evaluation order.
    """
    grid = np.asarray(t_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise InvalidInput("t_grid must not be empty")
    if trials < 100:
        raise InvalidInput("need at least 100 trials")
    values = np.array([statistic(rng.child(i).generator()) for i in range(trials)], dtype=float)
    return tail_comparison(values, grid, bound)


def tail_comparison(values, t_grid, bound: Callable[[float], float] | None = None) -> TailComparison:
    values = np.sort(np.asarray(values, dtype=float))
    grid = np.asarray(t_grid, dtype=float)
    above = values.size - np.searchsorted(values, grid, side="right")
    freq = above / values.size
    theo = np.array([bound(t) for t in grid]) if bound is not None else np.full(grid.shape, np.nan)
    return TailComparison(grid, freq, theo, int(values.size))
