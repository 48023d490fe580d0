"""Registry of trial functions.

A trial function receives the merged parameters (fixed values, the swept
value, and ``master_seed``) plus the trial's :class:`RandomSource`, and
returns one non-negative number. Quantities shared by all trials of a run,
such as a fixed truth, are drawn from streams keyed by name and cached.

Tail experiments return exceedance frequencies over a ``batch`` of draws so
that a trial stays cheap even when ``10^5`` draws are needed.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import concentration, graphical, linalg, matrix, minimax, nonparametric, sparse
from ..datagen import (
    NoiseKind,
    RandomSource,
    gaussian_design,
    make_instance,
    rademacher_design,
    regular_trig_design,
    sample_noise,
    sobolev_truth,
    sparse_truth,
    spiked_covariance_sample,
)
from ..errors import InvalidInput

TrialFn = Callable[[dict, RandomSource], float]


@dataclass(frozen=True)
class Estimator:
    name: str
    experiment: str
    trial: TrialFn
    description: str


REGISTRY: dict[str, Estimator] = {}


def register(name: str, experiment: str):
    def deco(fn: TrialFn) -> TrialFn:
        doc = (fn.__doc__ or "").strip().splitlines()
        REGISTRY[name] = Estimator(name, experiment, fn, doc[0] if doc else "")
        return fn

    return deco


def lookup(name: str) -> Estimator:
    try:
        return REGISTRY[name]
    except KeyError:
        raise InvalidInput(f"unknown estimator {name!r}") from None


def _int(p: dict, key: str) -> int:
    v = p[key]
    if float(v) != int(v):
        raise InvalidInput(f"{key} must be an integer")
    return int(v)


# ---------------------------------------------------------------------------
# tails


def _mean_tail(kind: str, p: dict, rng: RandomSource) -> float:
    n, batch, sigma = _int(p, "n"), _int(p, "batch"), float(p.get("sigma", 1.0))
    g = rng.generator()
    draws = sample_noise(NoiseKind(kind, sigma), n * batch, g).reshape(batch, n)
    return float(np.mean(draws.mean(axis=1) >= p["t"]))


@register("mean_gaussian", "tails")
def _tail_gaussian(p, rng):
    """Fraction of a batch of Gaussian sample means at or above t."""
    return _mean_tail("gaussian", p, rng)


@register("mean_rademacher", "tails")
def _tail_rademacher(p, rng):
    """Fraction of a batch of Rademacher sample means at or above t."""
    return _mean_tail("rademacher", p, rng)


@register("mean_uniform", "tails")
def _tail_uniform(p, rng):
    """Fraction of a batch of uniform sample means at or above t."""
    return _mean_tail("uniform", p, rng)


@register("matrix_bernstein_diag", "tails")
def _tail_matrix(p, rng):
    """Fraction of a batch of sums of random sign-diagonal matrices with lambda_max at or above t.

    Each summand is ``diag(eps_1, ..., eps_d)`` with iid signs: centered,
    ``lambda_max <= 1`` and ``sum E X_i^2 = summands * I``.
    """
    d, m, batch = _int(p, "d"), _int(p, "summands"), _int(p, "batch")
    g = rng.generator()
    # a sum of m signs is m - 2 Binomial(m, 1/2)
    diag_sums = m - 2.0 * g.binomial(m, 0.5, size=(batch, d))
    return float(np.mean(diag_sums.max(axis=1) >= p["t"]))


# ---------------------------------------------------------------------------
# sparse regression rates


@register("least_squares", "rates")
def _ls(p, rng):
    """Prediction MSE of least squares under a Gaussian design."""
    n, d, sigma = _int(p, "n"), _int(p, "d"), float(p.get("sigma", 1.0))
    g = rng.generator()
    x = gaussian_design(n, d, g)
    theta = g.standard_normal(d)
    inst = make_instance(x, theta, NoiseKind("gaussian", sigma), g)
    return sparse.least_squares(inst).predicted_mse


@register("lasso_rademacher", "rates")
def _lasso(p, rng):
    """Prediction MSE of the Lasso with the fast-rate tuning under a Rademacher design."""
    n, d, k = _int(p, "n"), _int(p, "d"), _int(p, "k")
    sigma, delta = float(p.get("sigma", 1.0)), float(p.get("delta", 0.05))
    g = rng.generator()
    x = rademacher_design(n, d, g)
    theta = sparse_truth(d, k, float(p.get("amplitude", 1.0)), g)
    inst = make_instance(x, theta, NoiseKind("gaussian", sigma), g)
    return sparse.lasso_cd(inst, sparse.TuningParameters.lasso_fast(sigma, n, d, delta)).predicted_mse


@register("ls_l1_ball_ort", "rates")
def _l1(p, rng):
    """Prediction MSE of l1-constrained least squares on the regular trigonometric design, flat truth."""
    n, d, radius = _int(p, "n"), _int(p, "d"), float(p.get("radius", 1.0))
    sigma = float(p.get("sigma", 1.0))
    g = rng.generator()
    x = _trig_design(n, d)
    theta = np.full(d, radius / d)
    inst = make_instance(x, theta, NoiseKind("gaussian", sigma), g)
    return sparse.ls_l1_ball(inst, radius).predicted_mse


@functools.lru_cache(maxsize=32)
def _trig_design(n: int, d: int) -> np.ndarray:
    x = regular_trig_design(n, d)
    x.setflags(write=False)
    return x


def _sequence_model(p, g):
    n, d, k = _int(p, "n"), _int(p, "d"), _int(p, "k")
    sigma, delta = float(p.get("sigma", 1.0)), float(p.get("delta", 0.05))
    tau = sparse.TuningParameters.hard_threshold(sigma, n, d, delta).tau
    theta = sparse_truth(d, k, 3 * tau * float(p.get("margin", 1.01)), g)
    y = theta + sample_noise(NoiseKind(p.get("noise", "gaussian"), sigma), d, g) / math.sqrt(n)
    return theta, sparse.threshold_estimate(y, tau, "hard"), tau


@register("hard_threshold_support", "rates")
def _hrd_support(p, rng):
    """0 when hard thresholding recovers the exact support in the sequence model, else 1."""
    theta, est, _ = _sequence_model(p, rng.generator())
    return float(not np.array_equal(theta != 0, est != 0))


@register("hard_threshold_error", "rates")
def _hrd_error(p, rng):
    """Squared error of hard thresholding divided by 16 k tau^2."""
    theta, est, tau = _sequence_model(p, rng.generator())
    return float(np.sum((est - theta) ** 2)) / (16 * np.count_nonzero(theta) * tau**2)


@register("slope_enumeration_gap", "rates")
def _slope_gap(p, rng):
    """|objective(slope_pgd) - objective(enumeration oracle)| on a random small instance."""
    n, d = _int(p, "n"), _int(p, "d")
    sigma, tau = float(p.get("sigma", 1.0)), float(p.get("tau", 0.3))
    g = rng.generator()
    x = g.standard_normal((n, d))
    theta = sparse_truth(d, max(1, d // 2), 0.5, g)
    inst = make_instance(x, theta, NoiseKind("gaussian", sigma), g)
    lam = sparse.slope_weights(d)
    fit = sparse.slope_pgd(inst, tau, lam)
    _, best = sparse.slope_enumeration_oracle(inst, tau, lam)
    return abs(fit.objective_value - best)


def grid_prox_sorted_l1(v: np.ndarray, weights: np.ndarray, coarse: float = 0.02, fine: float = 1e-3) -> np.ndarray:
    """Grid minimizer of ``0.5|v - theta|^2 + sum w_j |theta|_(j)`` on ``[-1, 1]^3``.

    A coarse pass over the whole box is refined on a fine grid around the
    coarse winner. The objective is strongly convex and the coarse winner
    lands within half a coarse cell of the minimizer in practice, so a
    window of two coarse cells each way contains the fine-grid minimizer.
    """
    def objective(pts):
        a = np.abs(pts)
        # descending order of three magnitudes without a full sort
        hi = np.maximum(np.maximum(a[:, 0], a[:, 1]), a[:, 2])
        lo = np.minimum(np.minimum(a[:, 0], a[:, 1]), a[:, 2])
        mid = a.sum(axis=1) - hi - lo
        pen = weights[0] * hi + weights[1] * mid + weights[2] * lo
        return 0.5 * np.sum((pts - v) ** 2, axis=1) + pen

    axis = np.arange(-1.0, 1.0 + coarse / 2, coarse)
    pts = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3)
    c = pts[np.argmin(objective(pts))]
    offs = np.arange(-2 * coarse, 2 * coarse + fine / 2, fine)
    fine_pts = np.stack(np.meshgrid(c[0] + offs, c[1] + offs, c[2] + offs, indexing="ij"), -1).reshape(-1, 3)
    return fine_pts[np.argmin(objective(fine_pts))]


@register("prox_sorted_l1_grid_gap", "rates")
def _prox_gap(p, rng):
    """Sup-norm distance between the sorted-l1 prox and a grid-search minimizer, d = 3."""
    g = rng.generator()
    v = g.uniform(-1, 1, size=3)
    w = np.sort(g.uniform(0, 0.5, size=3))[::-1]
    return float(np.max(np.abs(sparse.prox_sorted_l1(v, w) - grid_prox_sorted_l1(v, w))))


@register("l0_bic_disagreement", "rates")
def _l0_bic(p, rng):
    """0 when ls_l0 at the BIC-selected cardinality returns the BIC support, else 1."""
    n, d, k = _int(p, "n"), _int(p, "d"), _int(p, "k")
    sigma = float(p.get("sigma", 1.0))
    g = rng.generator()
    inst = make_instance(gaussian_design(n, d, g), sparse_truth(d, k, 0.5, g), NoiseKind("gaussian", sigma), g)
    bic = sparse.bic_estimate(inst, sparse.TuningParameters.bic(sigma, n, d))
    l0 = sparse.ls_l0(inst, len(bic.support))
    return float(bic.support != l0.support)


@register("lasso_ort_soft_gap", "rates")
def _lasso_ort(p, rng):
    """Sup-norm gap between coordinate-descent Lasso and soft thresholding under an orthogonal design."""
    n, d, k = _int(p, "n"), _int(p, "d"), _int(p, "k")
    sigma = float(p.get("sigma", 1.0))
    g = rng.generator()
    x = _trig_design(n, d)
    inst = make_instance(x, sparse_truth(d, k, 0.5, g), NoiseKind("gaussian", sigma), g)
    tuning = sparse.TuningParameters.lasso_slow(sigma, n, d)
    fit = sparse.lasso_cd(inst, tuning, tol=1e-12)
    closed = sparse.threshold_estimate(x.T @ inst.response / n, tuning.tau / 2, "soft")
    return float(np.max(np.abs(fit.estimate - closed)))


@register("eckart_young_excess", "rates")
def _eckart_young(p, rng):
    """How much the truncated SVD loses to the best of many random rank-1 competitors (0 when optimal)."""
    m, candidates = _int(p, "m"), _int(p, "candidates")
    g = rng.generator()
    a = g.standard_normal((m, m))
    best = linalg.truncate_svd(a, 1)
    u = g.standard_normal((candidates, m))
    v = g.standard_normal((candidates, m))
    # scale each random direction pair by its least squares coefficient
    coef = np.einsum("ci,ij,cj->c", u, a, v) / (np.sum(u**2, 1) * np.sum(v**2, 1))
    resid = np.sum(a**2) - coef**2 * np.sum(u**2, 1) * np.sum(v**2, 1)
    competitor = math.sqrt(max(float(resid.min()), 0.0))
    return max(0.0, float(np.linalg.norm(a - best)) - competitor)


@register("vg_certificate_failure", "rates")
def _vg(p, rng):
    """0 when random VG and sparse VG codes pass an independent distance recheck, else 1."""
    g = rng.generator()
    d = int(g.integers(16, 49))
    gamma = float(g.uniform(0.1, 0.35))
    code = minimax.varshamov_gilbert(d, gamma, g)
    ok = code.size == math.floor(math.exp(gamma**2 * d) + 1e-9)
    ok &= _all_pairs_at_least(code.codewords, (0.5 - gamma) * d)
    k = int(g.integers(1, 5))
    ds = 8 * k + int(g.integers(0, 40))
    sc = minimax.sparse_varshamov_gilbert(ds, k, g)
    ok &= sc.size == minimax.sparse_vg_size(ds, k) and bool(np.all(sc.codewords.sum(1) == k))
    ok &= _all_pairs_at_least(sc.codewords, k / 2)
    return float(not ok)


def _all_pairs_at_least(words: np.ndarray, dist: float) -> bool:
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            if np.count_nonzero(words[i] != words[j]) < dist - 1e-9:
                return False
    return True


# ---------------------------------------------------------------------------
# matrix estimation


def _svt_setting(p):
    n, d, t, r = _int(p, "n"), _int(p, "d"), _int(p, "T"), _int(p, "rank")
    sigma, delta = float(p.get("sigma", 1.0)), float(p.get("delta", 0.1))
    truth = _low_rank(d, t, r, float(p.get("scale", 5.0)), int(p.get("master_seed", 0)))
    return n, d, t, r, sigma, delta, truth


@functools.lru_cache(maxsize=32)
def _low_rank(d, t, r, scale, seed):
    m = matrix.low_rank_truth(d, t, r, scale, RandomSource(seed).child("shared", "low_rank"))
    m.setflags(write=False)
    return m


@register("svt_bound_ratio", "rates")
def _svt(p, rng):
    """|Theta_hat - Theta*|_F^2 / (144 rank tau^2) for singular value thresholding."""
    n, d, t, r, sigma, delta, truth = _svt_setting(p)
    inst = matrix.make_matrix_instance(_trig_design(n, d), truth, sigma, rng.generator())
    two_tau = matrix.svt_threshold(sigma, n, d, t, delta)
    est = matrix.svt(matrix.to_sequence_model(inst), two_tau)
    return float(np.sum((est - truth) ** 2)) / (144 * r * (two_tau / 2) ** 2)


@register("rank_penalized_bound_ratio", "rates")
def _rank_pen(p, rng):
    """|X Theta_hat - X Theta*|_F^2 / n / (8 rank tau^2) for the rank-penalized estimator."""
    n, d, t, r, sigma, delta, truth = _svt_setting(p)
    x = _trig_design(n, d)
    inst = matrix.make_matrix_instance(x, truth, sigma, rng.generator())
    tau = matrix.svt_threshold(sigma, n, d, t, delta) / 2
    fitted = matrix.rank_penalized(inst, tau**2)
    return float(np.sum((fitted - x @ truth) ** 2)) / n / (8 * r * tau**2)


@functools.lru_cache(maxsize=32)
def _spike(d, k, seed):
    g = RandomSource(seed).child("shared", "spike").generator()
    v = np.zeros(d)
    v[np.sort(g.choice(d, size=k, replace=False))] = (2.0 * g.integers(0, 2, size=k) - 1.0) / math.sqrt(k)
    v.setflags(write=False)
    return v


@register("sparse_pca", "pca")
def _spca(p, rng):
    """Sign-aligned distance between the k-sparse leading eigenvector and the spike."""
    n, d, k = _int(p, "n"), _int(p, "d"), _int(p, "k")
    v = _spike(d, k, int(p.get("master_seed", 0)))
    x = spiked_covariance_sample(n, d, float(p.get("theta", 1.0)), v, rng.generator())
    return linalg.sign_aligned_distance(matrix.sparse_pca(matrix.empirical_covariance(x), k), v)


# ---------------------------------------------------------------------------
# nonparametric


@functools.lru_cache(maxsize=8)
def _sobolev_truth(beta, q, n_coeffs, seed):
    c = sobolev_truth(beta, q, n_coeffs, RandomSource(seed).child("shared", "sobolev"))
    return nonparametric.FourierFunction(c)


@functools.lru_cache(maxsize=64)
def _regular_values(beta, q, n_coeffs, seed, n):
    return nonparametric.sample_on_regular_design(_sobolev_truth(beta, q, n_coeffs, seed), n)


def _nonparam(p, rng):
    beta, q = float(p["beta"]), float(p.get("q_budget", 1.0))
    n_coeffs, seed, n = _int(p, "truth_coeffs"), int(p.get("master_seed", 0)), _int(p, "n")
    truth = _sobolev_truth(beta, q, n_coeffs, seed)
    y = _regular_values(beta, q, n_coeffs, seed, n) + float(p.get("sigma", 1.0)) * rng.generator().standard_normal(n)
    return truth, y


@register("projection", "nonparam")
def _projection(p, rng):
    """L2 error of the projection estimator tuned to the true smoothness."""
    truth, y = _nonparam(p, rng)
    return nonparametric.function_l2_error(nonparametric.projection_estimator(y, float(p["beta"])), truth)


def _adaptive(method, p, rng):
    truth, y = _nonparam(p, rng)
    tuning = nonparametric.adaptive_tuning(method, float(p.get("sigma", 1.0)), y.size, float(p.get("delta", 0.05)))
    return nonparametric.function_l2_error(nonparametric.adaptive_estimator(y, method, tuning), truth)


@register("adaptive_bic", "nonparam")
def _adaptive_bic(p, rng):
    """L2 error of the hard-thresholding (BIC) adaptive estimator."""
    return _adaptive("bic", p, rng)


@register("adaptive_lasso", "nonparam")
def _adaptive_lasso(p, rng):
    """L2 error of the soft-thresholding (Lasso) adaptive estimator."""
    return _adaptive("lasso", p, rng)


# ---------------------------------------------------------------------------
# graphical models


def _cycle_ising(d: int, coupling: float) -> graphical.IsingModel:
    w = np.zeros((d, d))
    for i in range(d):
        j = (i + 1) % d
        w[i, j] = w[j, i] = coupling
    return graphical.IsingModel(w)


@register("ising_linf_sq", "ising")
def _ising(p, rng):
    """max_jk |W_hat - W*|^2 for the pseudo-likelihood fit on a cycle, exact samples."""
    n, d = _int(p, "n"), _int(p, "d")
    model = _cycle_ising(d, float(p.get("coupling", 0.3)))
    x = graphical.ising_sample_exact(model, n, rng.generator())
    fit = graphical.ising_fit(x, float(p.get("lam", model.lambda_budget)))
    return float(np.max(np.abs(fit.w - model.w)) ** 2)


@register("ising_conditional_gap", "ising")
def _ising_cond(p, rng):
    """Largest gap between the closed-form conditional and the enumerated one, d <= 4."""
    g = rng.generator()
    d = int(g.integers(2, _int(p, "max_d") + 1))
    w = np.triu(g.normal(scale=float(p.get("scale", 0.5)), size=(d, d)), 1)
    model = graphical.IsingModel(w + w.T)
    table = graphical.ising_enumerate(model)
    index = {tuple(s): i for i, s in enumerate(table.states)}
    gap = 0.0
    for z in table.states:
        for j in range(d):
            zp, zm = z.copy(), z.copy()
            zp[j], zm[j] = 1.0, -1.0
            pp, pm = table.probabilities[index[tuple(zp)]], table.probabilities[index[tuple(zm)]]
            gap = max(gap, abs(pp / (pp + pm) - graphical.ising_conditional(model, j, z)))
    return gap


@functools.lru_cache(maxsize=8)
def _precision(d, edges, weight, seed):
    t = graphical.sparse_precision(d, edges, weight, RandomSource(seed).child("shared", "precision"))
    t.setflags(write=False)
    return t


@register("glasso_frobenius_sq", "glasso")
def _glasso(p, rng):
    """|Theta_hat - Theta*|_F^2 for the graphical lasso at lambda = c sqrt(log(d/delta)/n)."""
    n, d = _int(p, "n"), _int(p, "d")
    theta = _precision(d, _int(p, "edges"), float(p.get("weight", 0.3)), int(p.get("master_seed", 0)))
    g = rng.generator()
    x = g.multivariate_normal(np.zeros(d), np.linalg.inv(theta), size=n, method="cholesky")
    lam = graphical.glasso_lambda(n, d, float(p.get("delta", 0.05)), float(p.get("c", 2.0)))
    est = graphical.graphical_lasso(matrix.empirical_covariance(x), lam, tol=1e-10)
    return float(np.sum((est.theta - theta) ** 2))


@register("glasso_monotonicity_violation", "glasso")
def _glasso_mono(p, rng):
    """Largest increase of the graphical lasso objective between iterations (0 when monotone)."""
    g = rng.generator()
    d = _int(p, "d")
    x = g.standard_normal((_int(p, "n"), d)) @ g.standard_normal((d, d))
    lam = float(g.uniform(0.05, float(p.get("max_lambda", 0.5))))
    hist = np.array(graphical.graphical_lasso(matrix.empirical_covariance(x), lam).history)
    return float(max(np.max(np.diff(hist), initial=0.0), 0.0))


@register("glasso_inverse_gap", "glasso")
def _glasso_inv(p, rng):
    """Sup-norm gap between the lambda = 0 graphical lasso and the inverse covariance, d = 4."""
    g = rng.generator()
    d = _int(p, "d")
    s = matrix.empirical_covariance(g.standard_normal((_int(p, "n"), d)))
    est = graphical.graphical_lasso(s, 0.0)
    return float(np.max(np.abs(est.theta - np.linalg.inv(s))))


# ---------------------------------------------------------------------------
# minimax


@register("two_point", "minimax")
def _two_point(p, rng):
    """Error frequency of the minimum-distance test under one of two hypotheses |delta|^2 = 8 alpha^2 sigma^2/n."""
    n, d, batch = _int(p, "n"), _int(p, "d"), _int(p, "batch")
    sigma, alpha = float(p.get("sigma", 1.0)), float(p["alpha"])
    j = _int(p, "hypothesis")
    theta0 = np.zeros(d)
    theta1 = np.zeros(d)
    theta1[0] = math.sqrt(8 * alpha**2 * sigma**2 / n)
    report = minimax.two_point_experiment(theta0, theta1, sigma, n, batch, rng)
    return float(report.errors[j])


@functools.lru_cache(maxsize=8)
def _packing(d, k, sigma, n, beta, seed):
    return minimax.sparse_packing(d, k, sigma, n, beta, RandomSource(seed).child("shared", "packing"))


@register("fano_packing", "minimax")
def _fano(p, rng):
    """Error frequency of the minimum-distance test under one hypothesis of a sparse packing."""
    n, d, k, batch = _int(p, "n"), _int(p, "d"), _int(p, "k"), _int(p, "batch")
    sigma, alpha = float(p.get("sigma", 1.0)), float(p["alpha"])
    pack = _packing(d, k, sigma, n, math.sqrt(alpha / 8), int(p.get("master_seed", 0)))
    j = _int(p, "hypothesis")
    if j >= pack.size:
        raise InvalidInput(f"packing has only {pack.size} hypotheses")
    report = minimax.fano_experiment(pack.hypotheses, sigma, n, batch, rng)
    return float(report.errors[j])


def packing_size(p: dict) -> int:
    """Number of hypotheses of the packing a ``fano_packing`` run would build."""
    return minimax.sparse_vg_size(_int(p, "d"), _int(p, "k"))


# ---------------------------------------------------------------------------
# closed-form bounds used by checks


def tail_bound(name: str, t: float, p: dict) -> float:
    if name == "hoeffding":
        sigma = float(p.get("sigma", 1.0))
        return concentration.hoeffding_bound(_int(p, "n"), [(-sigma, sigma)], t)
    if name == "matrix_bernstein":
        m = _int(p, "summands")
        return concentration.matrix_bernstein_bound(_int(p, "d"), float(m), 1.0, t, p.get("form", "bernstein"))
    raise InvalidInput(f"unknown bound {name!r}")


def reference_rate(name: str, x: float, p: dict) -> float:
    if name == "sparse_pca":
        return matrix.sparse_pca_rate(int(x), _int(p, "d"), _int(p, "k"))
    raise InvalidInput(f"unknown rate {name!r}")
