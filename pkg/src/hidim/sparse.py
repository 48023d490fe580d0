"""Sparse linear regression estimators and diagnostics.

All penalized objectives use the normalization ``(1/n)|Y - X theta|_2^2``:

* BIC: ``+ tau^2 |theta|_0``
* Lasso: ``+ 2 tau |theta|_1``
* SLOPE: ``+ 2 tau sum_j lambda_j |theta|_(j)``
* ridge: ``+ tau |theta|_2^2``
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datagen import RegressionInstance, RngLike, as_generator
from .errors import InvalidInput
from .linalg import as_matrix, as_vector, operator_norm, pseudo_inverse_solve


@dataclass
class EstimateReport:
    estimate: np.ndarray
    objective_value: float
    iterations: int = 0
    predicted_mse: Optional[float] = None
    converged: bool = True
    support: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        self.support = tuple(int(i) for i in np.flatnonzero(self.estimate))


def _report(inst: RegressionInstance, theta: np.ndarray, objective: float, iterations: int = 0,
            converged: bool = True) -> EstimateReport:
    mse = None
    if inst.truth is not None:
        diff = inst.design @ (theta - inst.truth)
        mse = float(diff @ diff) / inst.n
    return EstimateReport(theta, float(objective), iterations, mse, converged)


def _rss(inst: RegressionInstance, theta: np.ndarray) -> float:
    r = inst.response - inst.design @ theta
    return float(r @ r) / inst.n


@dataclass(frozen=True)
class TuningParameters:
    """A regularization level together with the formula that produced it.

    ``tau`` means different things per estimator (see the module docstring);
    ``provenance`` records which formula was used.
    """

    tau: float
    delta: float
    sigma: float
    provenance: str = "manual"

    def __post_init__(self):
        if not math.isfinite(self.tau) or self.tau < 0:
            raise InvalidInput("tau must be finite and non-negative")
        if not 0 < self.delta < 1:
            raise InvalidInput("delta must lie in (0, 1)")
        if self.sigma < 0:
            raise InvalidInput("sigma must be non-negative")

    @classmethod
    def bic(cls, sigma: float, n: int, d: int, delta: float = 0.05) -> "TuningParameters":
        """``tau^2 = 16 log(6) sigma^2/n + 32 sigma^2 log(e d)/n``."""
        tau2 = 16 * math.log(6) * sigma**2 / n + 32 * sigma**2 * math.log(math.e * d) / n
        return cls(math.sqrt(tau2), delta, sigma, "bic")

    @classmethod
    def hard_threshold(cls, sigma: float, n: int, d: int, delta: float = 0.05) -> "TuningParameters":
        """``tau = sigma sqrt(2 log(2d/delta) / n)``; thresholding happens at ``2 tau``."""
        return cls(sigma * math.sqrt(2 * math.log(2 * d / delta) / n), delta, sigma, "hard_threshold")

    @classmethod
    def orthogonal_threshold(cls, sigma: float, n: int, d: int, delta: float = 0.05) -> "TuningParameters":
        """``tau = 2 sigma sqrt(2 log(2d/delta) / n)`` for BIC or Lasso under an orthogonal design.

        With ``X^T X / n = I`` the BIC with this ``tau`` is hard thresholding
        of ``X^T Y / n`` at ``tau`` and the Lasso is soft thresholding at
        ``tau``; this is the level of :meth:`hard_threshold` doubled.
        """
        tau = 2 * sigma * math.sqrt(2 * math.log(2 * d / delta) / n)
        return cls(tau, delta, sigma, "orthogonal_threshold")

    @classmethod
    def lasso_slow(cls, sigma: float, n: int, d: int, delta: float = 0.05) -> "TuningParameters":
        """``2 tau = 2 sigma sqrt(2 log(2d)/n) + 2 sigma sqrt(2 log(1/delta)/n)``."""
        two_tau = 2 * sigma * (math.sqrt(2 * math.log(2 * d) / n) + math.sqrt(2 * math.log(1 / delta) / n))
        return cls(two_tau / 2, delta, sigma, "lasso_slow")

    @classmethod
    def lasso_fast(cls, sigma: float, n: int, d: int, delta: float = 0.05) -> "TuningParameters":
        """``2 tau = 8 sigma sqrt(log(2d)/n) + 8 sigma sqrt(log(1/delta)/n)``."""
        two_tau = 8 * sigma * (math.sqrt(math.log(2 * d) / n) + math.sqrt(math.log(1 / delta) / n))
        return cls(two_tau / 2, delta, sigma, "lasso_fast")

    @classmethod
    def lasso_dictionary(cls, sigma: float, n: int, m: int, delta: float = 0.05) -> "TuningParameters":
        """Oracle-inequality level over a dictionary of size ``m``:
        ``2 tau = 8 sigma sqrt(2 log(2m)/n) + 8 sigma sqrt(2 log(1/delta)/n)``."""
        two_tau = 8 * sigma * (math.sqrt(2 * math.log(2 * m) / n) + math.sqrt(2 * math.log(1 / delta) / n))
        return cls(two_tau / 2, delta, sigma, "lasso_dictionary")

    @classmethod
    def slope(cls, sigma: float, n: int, delta: float = 0.05) -> "TuningParameters":
        """``tau = 8 sqrt(2) sigma sqrt(log(1/delta)/n)``."""
        return cls(8 * math.sqrt(2) * sigma * math.sqrt(math.log(1 / delta) / n), delta, sigma, "slope")


def slope_weights(d: int) -> np.ndarray:
    """``lambda_j = sqrt(log(2d/j))``, ``j = 1..d``."""
    j = np.arange(1, d + 1)
    return np.sqrt(np.log(2.0 * d / j))


def least_squares(inst: RegressionInstance) -> EstimateReport:
    theta = pseudo_inverse_solve(inst.design, inst.response)
    return _report(inst, theta, _rss(inst, theta))


def threshold_estimate(y, tau: float, mode: str = "hard") -> np.ndarray:
    """Hard (``y 1{|y| > 2 tau}``) or soft (``(1 - 2 tau/|y|)_+ y``) thresholding."""
    y = as_vector(y, "y")
    if tau < 0:
        raise InvalidInput("tau must be non-negative")
    thr = 2.0 * tau
    if mode == "hard":
        return np.where(np.abs(y) > thr, y, 0.0)
    if mode == "soft":
        return np.sign(y) * np.maximum(np.abs(y) - thr, 0.0)
    raise InvalidInput(f"mode must be 'hard' or 'soft', got {mode!r}")


def soft_threshold(x, level):
    return np.sign(x) * np.maximum(np.abs(x) - level, 0.0)


# ---------------------------------------------------------------------------
# l1-constrained least squares


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{w : |w|_1 <= radius}`` by sort-and-threshold."""
    v = as_vector(v, "v")
    if radius < 0:
        raise InvalidInput("radius must be non-negative")
    if radius == 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.flatnonzero(u - (css - radius) / j > 0)[-1]
    level = (css[rho] - radius) / (rho + 1)
    return np.sign(v) * np.maximum(a - level, 0.0)


def ls_l1_ball(inst: RegressionInstance, radius: float, max_iter: int = 10_000, tol: float = 1e-8) -> EstimateReport:
    """Least squares over the l1 ball of the given radius.

    Accelerated projected gradient with adaptive restart; the exit test is
    the Frank-Wolfe duality gap ``<grad, theta> + radius |grad|_inf <= tol``,
    which upper-bounds the suboptimality. ``converged`` is False when
    ``max_iter`` runs out first.
    """
    if radius < 0:
        raise InvalidInput("radius must be non-negative")
    n, d = inst.n, inst.d
    if radius == 0:
        z = np.zeros(d)
        return _report(inst, z, _rss(inst, z))
    G = inst.design.T @ inst.design / n
    b = inst.design.T @ inst.response / n
    yy = float(inst.response @ inst.response) / n
    L = 2.0 * max(float(np.linalg.eigvalsh(G)[-1]), 1e-300)

    def obj(th):
        return float(th @ G @ th - 2 * b @ th + yy)

    def gap(th, grad):
        return float(grad @ th + radius * np.max(np.abs(grad)))

    theta = np.zeros(d)
    z = theta.copy()
    t = 1.0
    best, best_obj = theta, obj(theta)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        grad_z = 2 * (G @ z - b)
        new = project_l1_ball(z - grad_z / L, radius)
        new_obj = obj(new)
        if new_obj > obj(theta):
            # restart momentum
            t = 1.0
            z = theta
            grad_z = 2 * (G @ z - b)
            new = project_l1_ball(z - grad_z / L, radius)
            new_obj = obj(new)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        z = new + ((t - 1) / t_next) * (new - theta)
        theta, t = new, t_next
        if new_obj < best_obj:
            best, best_obj = new, new_obj
        if gap(theta, 2 * (G @ theta - b)) <= tol:
            converged = True
            break
    if gap(best, 2 * (G @ best - b)) > gap(theta, 2 * (G @ theta - b)):
        best = theta
    return _report(inst, best, _rss(inst, best), it, converged)


# ---------------------------------------------------------------------------
# support enumeration


def _support_fit(G: np.ndarray, b: np.ndarray, S: tuple[int, ...]) -> tuple[np.ndarray, float]:
    """Least squares restricted to ``S``; returns coefficients and the decrease in RSS."""
    if not S:
        return np.zeros(0), 0.0
    idx = list(S)
    coef = np.linalg.pinv(G[np.ix_(idx, idx)], hermitian=True) @ b[idx]
    return coef, float(b[idx] @ coef)


def _enumerate_best(inst: RegressionInstance, sizes, penalty: float) -> tuple[np.ndarray, float]:
    n, d = inst.n, inst.d
    G = inst.design.T @ inst.design / n
    b = inst.design.T @ inst.response / n
    yy = float(inst.response @ inst.response) / n
    best_key = None
    best_theta = np.zeros(d)
    for k in sizes:
        for S in itertools.combinations(range(d), k):
            coef, gain = _support_fit(G, b, S)
            val = yy - gain + penalty * k
            tie_tol = 1e-12 * (1.0 + abs(val))
            if best_key is None or val < best_key[0] - tie_tol or (abs(val - best_key[0]) <= tie_tol and S < best_key[1]):
                best_key = (val, S)
                best_theta = np.zeros(d)
                best_theta[list(S)] = coef
    return best_theta, best_key[0]


def ls_l0(inst: RegressionInstance, k: int, d_guard: int = 25) -> EstimateReport:
    """Exact best-subset least squares over supports of size at most ``k``.

    Ties go to the lexicographically smallest support.
    """
    if inst.d > d_guard:
        raise InvalidInput(f"d={inst.d} exceeds the enumeration guard {d_guard}")
    if not 0 <= k <= inst.d:
        raise InvalidInput("need 0 <= k <= d")
    theta, _ = _enumerate_best(inst, range(k + 1), 0.0)
    return _report(inst, theta, _rss(inst, theta))


def bic_estimate(inst: RegressionInstance, tuning: TuningParameters, d_guard: int = 20) -> EstimateReport:
    """Global minimizer of ``(1/n)|Y - X theta|^2 + tau^2 |theta|_0`` by enumerating supports."""
    if inst.d > d_guard:
        raise InvalidInput(f"d={inst.d} exceeds the enumeration guard {d_guard}")
    theta, val = _enumerate_best(inst, range(inst.d + 1), tuning.tau**2)
    return _report(inst, theta, _rss(inst, theta) + tuning.tau**2 * np.count_nonzero(theta))


# ---------------------------------------------------------------------------
# Lasso


def lasso_objective(inst: RegressionInstance, theta, tau: float) -> float:
    return _rss(inst, theta) + 2 * tau * float(np.sum(np.abs(theta)))


def lasso_kkt_residual(G: np.ndarray, b: np.ndarray, theta: np.ndarray, tau: float) -> float:
    """Largest violation of the Lasso optimality conditions.

    With ``c = X^T (Y - X theta)/n``: ``|c_j| <= tau`` where ``theta_j = 0``
    and ``c_j = tau sign(theta_j)`` elsewhere.
    """
    c = b - G @ theta
    active = theta != 0
    viol_active = np.abs(c[active] - tau * np.sign(theta[active]))
    viol_zero = np.maximum(np.abs(c[~active]) - tau, 0.0)
    return float(max(viol_active.max(initial=0.0), viol_zero.max(initial=0.0)))


def lasso_cd(inst: RegressionInstance, tuning, max_iter: int = 10_000, tol: float = 1e-8,
             warm_start=None) -> EstimateReport:
    """Cyclic coordinate descent with covariance updates.

    Minimizes ``(1/n)|Y - X theta|^2 + 2 tau |theta|_1``. Sweeps alternate
    between the full coordinate set and the current active set; the exit
    test requires both a small coordinate change and a KKT residual
    ``<= tol``. ``tuning`` is a :class:`TuningParameters` or a bare ``tau``.
    """
    tau = tuning.tau if isinstance(tuning, TuningParameters) else float(tuning)
    if tau < 0:
        raise InvalidInput("tau must be non-negative")
    n, d = inst.n, inst.d
    X = inst.design
    G = X.T @ X / n
    b = X.T @ inst.response / n
    diag = np.diag(G).copy()
    if np.any(diag <= 0):
        raise InvalidInput("design has a zero column")
    theta = np.zeros(d) if warm_start is None else as_vector(warm_start).copy()
    grad = b - G @ theta  # = X^T (Y - X theta)/n
    it = 0
    converged = False
    full = np.arange(d)
    coords = full
    for it in range(1, max_iter + 1):
        max_change = 0.0
        for j in coords:
            old = theta[j]
            rho = grad[j] + diag[j] * old
            new = math.copysign(max(abs(rho) - tau, 0.0), rho) / diag[j]
            if new != old:
                delta = new - old
                grad -= G[:, j] * delta
                theta[j] = new
                max_change = max(max_change, abs(delta))
        scale = 1.0 + float(np.max(np.abs(theta)))
        if max_change <= tol * scale:
            if coords is full:
                # recompute the gradient from scratch to shed drift
                grad = b - G @ theta
                if lasso_kkt_residual(G, b, theta, tau) <= tol:
                    converged = True
                    break
            else:
                coords = full
                continue
        else:
            active = np.flatnonzero(theta)
            coords = active if (coords is full and active.size < d and active.size) else full
    return _report(inst, theta, lasso_objective(inst, theta, tau), it, converged)


# ---------------------------------------------------------------------------
# SLOPE


def sorted_l1_norm(theta, weights) -> float:
    a = np.sort(np.abs(np.asarray(theta, dtype=float)))[::-1]
    return float(np.asarray(weights, dtype=float) @ a)


def prox_sorted_l1(v, weights) -> np.ndarray:
    """Exact minimizer of ``0.5 |v - theta|^2 + sum_j w_j |theta|_(j)``.

    Sort ``|v|`` decreasingly, subtract the weights, project onto the
    non-increasing non-negative cone by pool-adjacent-violators, then undo the
    sort and restore signs.
    """
    v = as_vector(v, "v")
    w = as_vector(weights, "weights")
    if w.size != v.size:
        raise InvalidInput("weights and v must have the same length")
    if np.any(w < 0) or np.any(np.diff(w) > 0):
        raise InvalidInput("weights must be non-negative and non-increasing")
    a = np.abs(v)
    order = np.argsort(-a, kind="stable")
    z = a[order] - w
    # PAVA for a non-increasing fit
    sums: list[float] = []
    counts: list[int] = []
    for val in z:
        sums.append(float(val))
        counts.append(1)
        while len(sums) > 1 and sums[-2] / counts[-2] <= sums[-1] / counts[-1]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    fit = np.concatenate([np.full(c, max(s / c, 0.0)) for s, c in zip(sums, counts)]) if sums else np.zeros(0)
    out = np.empty_like(a)
    out[order] = fit
    return np.sign(v) * out


def slope_objective(inst: RegressionInstance, theta, tau: float, lambda_seq) -> float:
    return _rss(inst, theta) + 2 * tau * sorted_l1_norm(theta, lambda_seq)


def slope_pgd(inst: RegressionInstance, tau: float, lambda_seq=None, max_iter: int = 100_000,
              tol: float = 1e-10) -> EstimateReport:
    """Proximal gradient for ``(1/n)|Y - X theta|^2 + 2 tau |theta|_*``.

    Step ``1/L`` with ``L = 2 ||X||_op^2 / n``; the objective is checked to be
    non-increasing at every iteration. Exit when the step moves no
    coordinate by more than ``tol * (1 + |theta|_inf)``.
    """
    if tau < 0:
        raise InvalidInput("tau must be non-negative")
    n, d = inst.n, inst.d
    lam = slope_weights(d) if lambda_seq is None else as_vector(lambda_seq, "lambda_seq")
    if lam.size != d or np.any(lam <= 0) or np.any(np.diff(lam) > 0):
        raise InvalidInput("lambda_seq must be positive, non-increasing and of length d")
    X = inst.design
    G = X.T @ X / n
    b = X.T @ inst.response / n
    yy = float(inst.response @ inst.response) / n
    L = 2 * operator_norm(X) ** 2 / n
    if L == 0:
        z = np.zeros(d)
        return _report(inst, z, slope_objective(inst, z, tau, lam))
    weights = 2 * tau * lam / L

    def obj(th):
        return float(th @ G @ th - 2 * b @ th + yy) + 2 * tau * sorted_l1_norm(th, lam)

    theta = np.zeros(d)
    cur = obj(theta)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        grad = 2 * (G @ theta - b)
        new = prox_sorted_l1(theta - grad / L, weights)
        new_obj = obj(new)
        if new_obj > cur + 1e-10 * max(1.0, abs(cur)):
            raise RuntimeError(f"SLOPE objective increased from {cur} to {new_obj}; step size is wrong")
        step = float(np.max(np.abs(new - theta)))
        theta, cur = new, new_obj
        if step <= tol * (1.0 + float(np.max(np.abs(theta)))):
            converged = True
            break
    return _report(inst, theta, slope_objective(inst, theta, tau, lam), it, converged)


def _ordered_partitions(items: tuple):
    if not items:
        yield []
        return
    for r in range(1, len(items) + 1):
        for first in itertools.combinations(items, r):
            rest = tuple(i for i in items if i not in first)
            for tail in _ordered_partitions(rest):
                yield [first] + tail


def slope_enumeration_oracle(inst: RegressionInstance, tau: float, lambda_seq, d_guard: int = 6) -> tuple[np.ndarray, float]:
    """Exact SLOPE minimizer for small ``d`` by enumerating sign and order patterns.

    A pattern fixes the signs, the zero set and the ordered groups of equal
    magnitudes. On that face the objective is a quadratic in the group
    magnitudes and is minimized in closed form; the minimizer is kept when it
    respects the pattern's order. The true minimizer lies in the relative
    interior of some face, so the best kept point is optimal. Requires a
    design of full column rank.
    """
    d = inst.d
    if d > d_guard:
        raise InvalidInput(f"d={d} exceeds the enumeration guard {d_guard}")
    lam = as_vector(lambda_seq, "lambda_seq")
    n = inst.n
    G = inst.design.T @ inst.design / n
    b = inst.design.T @ inst.response / n
    yy = float(inst.response @ inst.response) / n
    best = np.zeros(d)
    best_val = yy
    for m in range(1, d + 1):
        for support in itertools.combinations(range(d), m):
            for groups in _ordered_partitions(support):
                # penalty weights of each group from its sorted positions
                pos, pen = 0, []
                for grp in groups:
                    pen.append(float(lam[pos : pos + len(grp)].sum()))
                    pos += len(grp)
                pen = np.array(pen)
                for signs in itertools.product((1.0, -1.0), repeat=m):
                    sign_of = dict(zip(support, signs))
                    B = np.zeros((d, len(groups)))
                    for c, grp in enumerate(groups):
                        for i in grp:
                            B[i, c] = sign_of[i]
                    H = B.T @ G @ B
                    a = np.linalg.solve(H, B.T @ b - tau * pen)
                    if np.any(a <= 0) or np.any(np.diff(a) >= 0):
                        continue
                    theta = B @ a
                    val = slope_objective(inst, theta, tau, lam)
                    if val < best_val:
                        best, best_val = theta, val
    return best, best_val


# ---------------------------------------------------------------------------
# diagnostics


def incoherence(x) -> float:
    """``|X^T X / n - I_d|_inf`` (largest entry in absolute value)."""
    x = as_matrix(x, "x")
    n, d = x.shape
    return float(np.max(np.abs(x.T @ x / n - np.eye(d))))


def check_inc(x, k: int) -> bool:
    """Whether INC(k) holds: incoherence at most ``1/(32 k)``."""
    return incoherence(x) <= 1.0 / (32 * k)


def cone_condition_holds(theta, support, factor: float = 3.0) -> bool:
    """``|theta_{S^c}|_1 <= factor |theta_S|_1``."""
    theta = as_vector(theta, "theta")
    mask = np.zeros(theta.size, dtype=bool)
    idx = list(support)
    if idx and (min(idx) < 0 or max(idx) >= theta.size):
        raise InvalidInput("support indices out of range")
    mask[idx] = True
    return float(np.abs(theta[~mask]).sum()) <= factor * float(np.abs(theta[mask]).sum())


def ridge(inst: RegressionInstance, tau: float) -> EstimateReport:
    """``(X^T X/n + tau I)^{-1} X^T Y / n``."""
    if tau <= 0:
        raise InvalidInput("tau must be positive")
    n, d = inst.n, inst.d
    A = inst.design.T @ inst.design / n + tau * np.eye(d)
    theta = np.linalg.solve(A, inst.design.T @ inst.response / n)
    return _report(inst, theta, _rss(inst, theta) + tau * float(theta @ theta))


def maurey_sparsify(theta, k: int, dictionary_norm_bound: float, rng: RngLike) -> np.ndarray:
    """Average of ``k`` random atoms ``R sign(theta_j) e_j`` drawn with probability ``|theta_j|/R``.

    ``R = |theta|_1``. The result is unbiased for ``theta`` and has at most
    ``k`` nonzeros; with columns of norm at most ``D sqrt(n)`` the expected
    excess MSE is at most ``D^2 R^2 / k``.
    """
    theta = as_vector(theta, "theta")
    if k < 1:
        raise InvalidInput("k must be at least 1")
    if dictionary_norm_bound <= 0:
        raise InvalidInput("dictionary_norm_bound must be positive")
    R = float(np.abs(theta).sum())
    if R == 0:
        return np.zeros_like(theta)
    g = as_generator(rng)
    draws = g.choice(theta.size, size=k, p=np.abs(theta) / R)
    out = np.zeros_like(theta)
    np.add.at(out, draws, R * np.sign(theta[draws]) / k)
    return out


def maurey_excess_bound(theta, k: int, dictionary_norm_bound: float) -> float:
    """``D^2 R^2 / k`` with ``R = |theta|_1``."""
    R = float(np.abs(as_vector(theta)).sum())
    return dictionary_norm_bound**2 * R**2 / k
