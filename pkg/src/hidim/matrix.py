"""Low-rank matrix estimation, covariance estimation and (sparse) PCA."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datagen import RngLike, as_generator
from .errors import InvalidInput
from .linalg import (
    as_matrix,
    column_space_projection,
    hard_threshold_spectrum,
    svd,
    symmetric_eigh,
)

ORT_TOL = 1e-6


class DegenerateSpectrum(UserWarning):
    """Leading eigenvalue is not separated; the returned direction is arbitrary."""


@dataclass
class MatrixRegressionInstance:
    """``response = design @ truth + noise`` with matrix-valued parameter."""

    design: np.ndarray
    response: np.ndarray
    truth: Optional[np.ndarray] = None
    sigma: float = 0.0

    def __post_init__(self):
        self.design = as_matrix(self.design, "design")
        self.response = as_matrix(self.response, "response")
        if self.response.shape[0] != self.design.shape[0]:
            raise InvalidInput("design and response must have the same number of rows")
        if self.truth is not None:
            self.truth = as_matrix(self.truth, "truth")
            if self.truth.shape != (self.design.shape[1], self.response.shape[1]):
                raise InvalidInput("truth must be d x T")
        if self.sigma < 0:
            raise InvalidInput("sigma must be non-negative")

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def d(self) -> int:
        return self.design.shape[1]

    @property
    def t(self) -> int:
        return self.response.shape[1]


def make_matrix_instance(design, truth, sigma: float, rng: RngLike) -> MatrixRegressionInstance:
    """Gaussian noise ``E`` with iid ``N(0, sigma^2)`` entries."""
    design = as_matrix(design, "design")
    truth = as_matrix(truth, "truth")
    g = as_generator(rng)
    noise = sigma * g.standard_normal((design.shape[0], truth.shape[1]))
    return MatrixRegressionInstance(design, design @ truth + noise, truth, sigma)


def low_rank_truth(d: int, t: int, rank: int, scale: float, rng: RngLike) -> np.ndarray:
    """``U diag(s) V^T`` with Haar-random orthonormal factors and ``s_j = scale * (1 + j/rank)``."""
    if not 0 <= rank <= min(d, t):
        raise InvalidInput(f"rank must lie in [0, {min(d, t)}]")
    if rank == 0:
        return np.zeros((d, t))
    g = as_generator(rng)
    u, _ = np.linalg.qr(g.standard_normal((d, rank)))
    v, _ = np.linalg.qr(g.standard_normal((t, rank)))
    s = scale * (1.0 + np.arange(rank)[::-1] / rank)
    return (u * s) @ v.T


def to_sequence_model(inst: MatrixRegressionInstance) -> np.ndarray:
    """``X^T Y / n``; requires ``X^T X / n = I`` up to :data:`ORT_TOL`."""
    x = inst.design
    gram = x.T @ x / inst.n
    if np.max(np.abs(gram - np.eye(inst.d))) > ORT_TOL:
        raise InvalidInput("design does not satisfy X^T X / n = I")
    return x.T @ inst.response / inst.n


def svt_threshold(sigma: float, n: int, d: int, t: int, delta: float) -> float:
    """``2 tau = 8 sigma sqrt(log(12) (d v T) / n) + 4 sigma sqrt(2 log(1/delta) / n)``."""
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    if sigma < 0:
        raise InvalidInput("sigma must be non-negative")
    if n < 1:
        raise InvalidInput("n must be positive")
    return 8 * sigma * math.sqrt(math.log(12) * max(d, t) / n) + 4 * sigma * math.sqrt(
        2 * math.log(1 / delta) / n
    )


def svt(y, two_tau: float) -> np.ndarray:
    """Keep the singular triples of ``y`` whose value exceeds ``two_tau``."""
    if two_tau < 0:
        raise InvalidInput("two_tau must be non-negative")
    return hard_threshold_spectrum(y, two_tau)


def select_rank(inst: MatrixRegressionInstance, tau_sq: float) -> tuple[int, np.ndarray]:
    """Minimizing rank and the objective ``|Y - (Ybar)_k|_F^2/n + 2 tau^2 k`` for every ``k``.

    ``Ybar`` is the projection of ``Y`` onto the column span of ``X`` and
    ``(Ybar)_k`` its rank-``k`` truncation; ties go to the smaller ``k``.
    """
    if tau_sq < 0:
        raise InvalidInput("tau_sq must be non-negative")
    ybar = column_space_projection(inst.design, inst.response)
    lam = svd(ybar).singular_values
    resid0 = float(np.sum((inst.response - ybar) ** 2))
    kmax = min(inst.d, inst.t)
    tail = np.zeros(kmax + 1)
    # tail[k] = sum of lambda_j^2 over j > k; lam may be shorter than kmax
    sq = np.zeros(kmax)
    sq[: min(lam.size, kmax)] = lam[:kmax] ** 2
    tail[:kmax] = np.cumsum(sq[::-1])[::-1]
    obj = (resid0 + tail) / inst.n + 2 * tau_sq * np.arange(kmax + 1)
    return int(np.argmin(obj)), obj


def rank_penalized(inst: MatrixRegressionInstance, tau_sq: float) -> np.ndarray:
    """Fitted values ``X Theta_hat`` of the rank-penalized least squares estimator."""
    k, _ = select_rank(inst, tau_sq)
    ybar = column_space_projection(inst.design, inst.response)
    return svd(ybar).reconstruct(k)


def empirical_covariance(samples) -> np.ndarray:
    """``(1/n) sum_i X_i X_i^T`` (no centering)."""
    x = as_matrix(samples, "samples")
    if x.shape[0] < 1:
        raise InvalidInput("need at least one sample")
    s = x.T @ x / x.shape[0]
    return (s + s.T) / 2


def _orient(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def pca_leading(sigma_hat, gap_tol: float = 1e-6) -> np.ndarray:
    """Unit leading eigenvector with its first nonzero coordinate positive.

    A :class:`DegenerateSpectrum` warning is issued when the top two
    eigenvalues are within ``gap_tol``.
    """
    w, q = symmetric_eigh(sigma_hat)
    if w.size > 1 and w[0] - w[1] < gap_tol * max(1.0, abs(w[0])):
        warnings.warn("leading eigenvalue is not separated", DegenerateSpectrum, stacklevel=2)
    return _orient(q[:, 0].copy())


def sparse_pca(sigma_hat, k: int, d_guard: int = 20) -> np.ndarray:
    """Maximizer of ``u^T Sigma u`` over unit ``k``-sparse ``u`` by support enumeration."""
    s = as_matrix(sigma_hat, "sigma_hat")
    d = s.shape[0]
    if s.shape != (d, d):
        raise InvalidInput("sigma_hat must be square")
    if np.max(np.abs(s - s.T)) > 1e-8 * max(1.0, float(np.max(np.abs(s)))):
        raise InvalidInput("sigma_hat must be symmetric")
    if d > d_guard:
        raise InvalidInput(f"d={d} exceeds the enumeration guard {d_guard}")
    if not 1 <= k <= d:
        raise InvalidInput(f"need 1 <= k <= d, got k={k}")
    s = (s + s.T) / 2
    supports = np.array(list(itertools.combinations(range(d), k)))
    best_val, best_idx, best_vec = -np.inf, -1, None
    # batches keep memory bounded for large binomial coefficients
    for start in range(0, len(supports), 4096):
        block = supports[start : start + 4096]
        sub = s[block[:, :, None], block[:, None, :]]
        w, q = np.linalg.eigh(sub)
        top = w[:, -1]
        i = int(np.argmax(top))
        # strict improvement keeps the lexicographically smallest support on ties
        if top[i] > best_val + 1e-12 * max(1.0, abs(best_val) if np.isfinite(best_val) else 1.0):
            best_val, best_idx, best_vec = float(top[i]), start + i, q[i, :, -1]
    out = np.zeros(d)
    out[supports[best_idx]] = best_vec
    return _orient(out)


def sparse_pca_rate(n: int, d: int, k: int) -> float:
    """``sqrt(k log(e d / k) / n)``."""
    return math.sqrt(k * math.log(math.e * d / k) / n)
