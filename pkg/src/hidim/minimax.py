"""Divergences, Fano and Pinsker bounds, packing codes and testing experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datagen import RandomSource, RngLike, as_generator
from .errors import ConstructionFailed, InvalidInput
from .linalg import as_vector

DIVERGENCES = ("kl", "tv", "chi2")


@dataclass(frozen=True)
class DiscreteDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = as_vector(self.probabilities, "probabilities")
        if p.size == 0:
            raise InvalidInput("distribution needs at least one atom")
        if np.any(p < 0):
            raise InvalidInput("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def bernoulli(cls, theta: float) -> "DiscreteDistribution":
        return cls(np.array([1.0 - theta, theta]))

    def product(self, other: "DiscreteDistribution") -> "DiscreteDistribution":
        """Law of an independent pair, atoms in row-major order."""
        return DiscreteDistribution(np.outer(self.probabilities, other.probabilities).ravel())


def kl_gaussians(theta0, theta1, sigma_sq: float) -> float:
    """``KL(N(theta0, sigma^2 I), N(theta1, sigma^2 I)) = |theta0 - theta1|^2 / (2 sigma^2)``."""
    if sigma_sq <= 0:
        raise InvalidInput("sigma_sq must be positive")
    a, b = as_vector(theta0, "theta0"), as_vector(theta1, "theta1")
    if a.shape != b.shape:
        raise InvalidInput("means must have the same length")
    diff = a - b
    return float(diff @ diff) / (2 * sigma_sq)


def f_divergence(p: DiscreteDistribution, q: DiscreteDistribution, kind: str) -> float:
    """KL, total variation or chi-square divergence of ``p`` from ``q``.

    KL and chi-square are ``inf`` when ``p`` charges an atom that ``q`` does not.
    """
    a, b = p.probabilities, q.probabilities
    if a.shape != b.shape:
        raise InvalidInput("distributions must have the same support size")
    if kind == "tv":
        return 0.5 * float(np.abs(a - b).sum())
    if kind not in DIVERGENCES:
        raise InvalidInput(f"kind must be one of {DIVERGENCES}")
    if np.any((b == 0) & (a > 0)):
        return math.inf
    m = b > 0
    if kind == "kl":
        pos = m & (a > 0)
        return float(np.sum(a[pos] * np.log(a[pos] / b[pos])))
    return float(np.sum((a[m] - b[m]) ** 2 / b[m]))


def pinsker_gap(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """``sqrt(KL(p, q)) - TV(p, q)``, never negative."""
    return math.sqrt(f_divergence(p, q, "kl")) - f_divergence(p, q, "tv")


def fano_lower_bound(m: int, avg_kl: float) -> float:
    """``max(0, 1 - (avg_kl + log 2) / log m)`` for ``m`` hypotheses."""
    if m < 2:
        raise InvalidInput("need at least two hypotheses")
    if avg_kl < 0:
        raise InvalidInput("avg_kl must be non-negative")
    return max(0.0, 1.0 - (avg_kl + math.log(2)) / math.log(m))


@dataclass(frozen=True)
class BinaryCode:
    """Codewords in ``{0,1}^d`` (one per row) with certified minimum distance."""

    codewords: np.ndarray
    min_distance: int
    sparsity: Optional[int] = None

    def __post_init__(self):
        c = np.asarray(self.codewords)
        if c.ndim != 2 or not np.all((c == 0) | (c == 1)):
            raise InvalidInput("codewords must be a 2-d 0/1 array")
        c = c.astype(np.int8)
        object.__setattr__(self, "codewords", c)
        if self.sparsity is not None and np.any(c.sum(axis=1) != self.sparsity):
            raise InvalidInput("codeword weight differs from the declared sparsity")
        if c.shape[0] > 1 and pairwise_hamming(c).min() < self.min_distance:
            raise InvalidInput("declared minimum distance is not attained")

    @property
    def size(self) -> int:
        return int(self.codewords.shape[0])

    @property
    def length(self) -> int:
        return int(self.codewords.shape[1])


def pairwise_hamming(codewords) -> np.ndarray:
    """Hamming distances of all pairs ``i < j``, in ``np.triu_indices`` order."""
    c = np.asarray(codewords, dtype=np.int64)
    dist = c.sum(1)[:, None] + c.sum(1)[None, :] - 2 * (c @ c.T)
    i, j = np.triu_indices(c.shape[0], 1)
    return dist[i, j]


def _greedy_code(draw, m: int, required: int, max_attempts: int) -> np.ndarray:
    # accept random candidates that keep the distance certificate; give up after max_attempts draws
    words: list[np.ndarray] = []
    for _ in range(max_attempts):
        if len(words) == m:
            break
        cand = draw()
        if all(int(np.sum(cand != w)) >= required for w in words):
            words.append(cand)
    if len(words) < m:
        raise ConstructionFailed(
            f"found {len(words)} of {m} codewords within {max_attempts} attempts; retry with another seed"
        )
    return np.array(words, dtype=np.int8)


def varshamov_gilbert(d: int, gamma: float, rng: RngLike, max_attempts: int = 10_000) -> BinaryCode:
    """``floor(exp(gamma^2 d))`` codewords with pairwise distance at least ``(1/2 - gamma) d``."""
    if not 0 < gamma < 0.5:
        raise InvalidInput("gamma must lie in (0, 1/2)")
    if d < 1:
        raise InvalidInput("d must be positive")
    m = int(math.floor(math.exp(gamma * gamma * d) + 1e-9))
    required = int(math.ceil((0.5 - gamma) * d - 1e-9))
    g = as_generator(rng)
    words = _greedy_code(lambda: g.integers(0, 2, size=d), m, required, max_attempts)
    return BinaryCode(words, _certified_distance(words, d))


def sparse_vg_size(d: int, k: int) -> int:
    """``ceil(exp(k/8 log(1 + d/(2k))))``."""
    return int(math.ceil(math.exp(k / 8 * math.log(1 + d / (2 * k))) - 1e-9))


def sparse_varshamov_gilbert(d: int, k: int, rng: RngLike, max_attempts: int = 10_000) -> BinaryCode:
    """``k``-sparse codewords, pairwise distance at least ``k/2``, size :func:`sparse_vg_size`."""
    if not 1 <= k or 8 * k > d:
        raise InvalidInput(f"need 1 <= k <= d/8, got k={k}, d={d}")
    m = sparse_vg_size(d, k)
    required = int(math.ceil(k / 2))
    g = as_generator(rng)

    def draw():
        w = np.zeros(d, dtype=np.int8)
        w[g.choice(d, size=k, replace=False)] = 1
        return w

    words = _greedy_code(draw, m, required, max_attempts)
    return BinaryCode(words, _certified_distance(words, d), sparsity=k)


def _certified_distance(words: np.ndarray, d: int) -> int:
    return int(pairwise_hamming(words).min()) if words.shape[0] > 1 else d


@dataclass(frozen=True)
class SparsePacking:
    """Hypotheses built from a sparse code, with the quantities entering Fano's bound.

    ``alpha = 8 beta^2`` is the constant for which every pairwise squared
    distance is at most ``2 alpha sigma^2 log(M) / n``.
    """

    hypotheses: list
    code: BinaryCode
    alpha: float
    min_sq_distance: float
    max_sq_distance: float
    max_kl: float

    @property
    def size(self) -> int:
        return len(self.hypotheses)


def sparse_packing(d: int, k: int, sigma: float, n: int, beta: float, rng: RngLike) -> SparsePacking:
    """``theta_j = omega_j beta sigma sqrt(log(1 + d/(2k)) / n)`` over a sparse code."""
    if beta < 0 or sigma < 0:
        raise InvalidInput("beta and sigma must be non-negative")
    if n < 1:
        raise InvalidInput("n must be positive")
    code = sparse_varshamov_gilbert(d, k, rng)
    scale = beta * sigma * math.sqrt(math.log(1 + d / (2 * k)) / n)
    hyps = [scale * w.astype(float) for w in code.codewords]
    sq = scale**2 * pairwise_hamming(code.codewords).astype(float)
    max_sq = float(sq.max()) if sq.size else 0.0
    max_kl = n * max_sq / (2 * sigma**2) if sigma > 0 else (math.inf if max_sq > 0 else 0.0)
    return SparsePacking(hyps, code, 8 * beta**2, float(sq.min()) if sq.size else 0.0, max_sq, max_kl)


def sparse_packing_hypotheses(d: int, k: int, sigma: float, n: int, beta: float, rng: RngLike) -> list:
    return sparse_packing(d, k, sigma, n, beta, rng).hypotheses


def min_distance_test(hypotheses: Sequence, y) -> int:
    """Index of the hypothesis nearest to ``y``; the smallest index wins ties."""
    if len(hypotheses) == 0:
        raise InvalidInput("need at least one hypothesis")
    h = np.asarray(hypotheses, dtype=float)
    y = as_vector(y, "y")
    if h.ndim != 2 or h.shape[1] != y.size:
        raise InvalidInput("hypotheses and y must share a dimension")
    return int(np.argmin(np.sum((h - y) ** 2, axis=1)))


@dataclass(frozen=True)
class TestingReport:
    """Error rates of the minimum-distance test and the floors they are compared with.

    ``errors[j]`` is the empirical ``P_j(psi != j)``; ``trials`` draws were
    made under each hypothesis.
    """

    errors: np.ndarray
    trials: int
    kl: float
    floors: dict

    @property
    def empirical_error(self) -> float:
        """Maximum over hypotheses."""
        return float(self.errors.max())

    @property
    def average_error(self) -> float:
        return float(self.errors.mean())

    def stderr(self, average: bool = False) -> float:
        if average:
            p = self.average_error
            return math.sqrt(p * (1 - p) / (self.trials * self.errors.size))
        p = self.empirical_error
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def np_lower(self) -> float:
        return self.floors["pinsker"]


def _simulate_errors(hyps: np.ndarray, sigma: float, n_eff: int, trials: int,
                     rng: RandomSource, randomize_ties: bool) -> np.ndarray:
    errors = np.zeros(hyps.shape[0])
    sd = sigma / math.sqrt(n_eff)
    for j in range(hyps.shape[0]):
        g = rng.child("hypothesis", j).generator()
        y = hyps[j] + sd * g.standard_normal((trials, hyps.shape[1]))
        # squared distances via the expansion |y|^2 - 2 y.h + |h|^2; |y|^2 is common
        score = -2 * y @ hyps.T + np.sum(hyps**2, axis=1)
        best = score.min(axis=1, keepdims=True)
        ties = np.isclose(score, best, rtol=0, atol=1e-12 * max(1.0, float(np.abs(best).max())))
        if randomize_ties:
            pick = np.argmax(ties * g.uniform(size=ties.shape), axis=1)
        else:
            pick = np.argmax(ties, axis=1)
        errors[j] = np.mean(pick != j)
    return errors


def two_point_experiment(theta0, theta1, sigma: float, n_eff: int, trials: int, rng: RandomSource) -> TestingReport:
    """Error of the minimum-distance test between two Gaussian means.

    Draws ``Y ~ N(theta_j, sigma^2/n_eff I)`` under each hypothesis. Exact
    ties are broken uniformly at random, so identical hypotheses give
    error ``1/2``. Floors: ``(1 - sqrt(KL))/2`` and ``exp(-KL)/4``.
    """
    if sigma <= 0 or n_eff < 1 or trials < 1:
        raise InvalidInput("sigma, n_eff and trials must be positive")
    a, b = as_vector(theta0, "theta0"), as_vector(theta1, "theta1")
    kl = kl_gaussians(a, b, sigma**2 / n_eff)
    errors = _simulate_errors(np.vstack([a, b]), sigma, n_eff, trials, rng, randomize_ties=True)
    floors = {"pinsker": max(0.0, 0.5 * (1 - math.sqrt(kl))), "exponential": 0.25 * math.exp(-kl)}
    return TestingReport(errors, trials, kl, floors)


def fano_experiment(hypotheses: Sequence, sigma: float, n_eff: int, trials: int, rng: RandomSource) -> TestingReport:
    """Error of the minimum-distance test among ``M`` Gaussian means.

    Floors: Fano's bound at the average pairwise KL, and ``1/2 - 2 alpha``
    with ``alpha = max KL / log M`` (meaningful when ``M >= 5``, ``alpha < 1/4``).
    """
    h = np.asarray(hypotheses, dtype=float)
    if h.ndim != 2 or h.shape[0] < 2:
        raise InvalidInput("need at least two hypotheses")
    if sigma <= 0 or n_eff < 1 or trials < 1:
        raise InvalidInput("sigma, n_eff and trials must be positive")
    m = h.shape[0]
    sq = np.sum((h[:, None, :] - h[None, :, :]) ** 2, axis=2)
    kl = n_eff * sq / (2 * sigma**2)
    avg_kl = float(kl.sum()) / m**2
    alpha = float(kl.max()) / math.log(m)
    errors = _simulate_errors(h, sigma, n_eff, trials, rng, randomize_ties=False)
    floors = {"fano": fano_lower_bound(m, avg_kl), "packing": max(0.0, 0.5 - 2 * alpha)}
    return TestingReport(errors, trials, avg_kl, floors)
