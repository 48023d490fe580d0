"""Function estimation on the regular design with the trigonometric basis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._fourier import regular_design_coefficients, sobolev_weights, trig_basis_matrix
from .errors import InvalidInput
from .linalg import as_vector
from .sparse import TuningParameters, threshold_estimate


@dataclass(frozen=True)
class FourierFunction:
    """``f = sum_j coefficients[j-1] * phi_j``."""

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", as_vector(self.coefficients, "coefficients"))

    @property
    def basis_size(self) -> int:
        return int(self.coefficients.size)

    def __call__(self, x) -> np.ndarray:
        return trig_basis_matrix(x, self.basis_size) @ self.coefficients

    def l2_norm(self) -> float:
        # Parseval over an orthonormal basis
        return float(np.linalg.norm(self.coefficients))


@dataclass(frozen=True)
class SobolevSpec:
    beta: float
    q_budget: float

    def __post_init__(self):
        if self.beta <= 0.5:
            raise InvalidInput("beta must exceed 1/2")
        if self.q_budget <= 0:
            raise InvalidInput("Q must be positive")


def trig_basis_eval(j: int, x: float) -> float:
    if j < 1:
        raise InvalidInput("basis index starts at 1")
    return float(trig_basis_matrix([x], j)[0, j - 1])


def sobolev_weight(j: int, beta: float) -> float:
    """``a_j = j^beta`` for even j, ``(j-1)^beta`` for odd j; ``a_1`` is taken as 1."""
    if j < 1:
        raise InvalidInput("index starts at 1")
    return float(sobolev_weights(j, beta)[-1])


def ellipsoid_norm(theta, beta: float) -> float:
    """``sum_j a_j^2 theta_j^2`` with weight 1 on the constant coefficient."""
    theta = as_vector(theta, "theta")
    return float(np.sum(sobolev_weights(theta.size, beta) ** 2 * theta**2))


def in_ellipsoid(theta, spec: SobolevSpec, rtol: float = 1e-10) -> bool:
    return ellipsoid_norm(theta, spec.beta) <= spec.q_budget * (1 + rtol)


def truncation_bias_bound(spec: SobolevSpec, m: int) -> float:
    """``Q m^(-2 beta)``, bounding ``sum_{j>m} theta_j^2`` over the ellipsoid."""
    if m < 1:
        raise InvalidInput("m must be positive")
    return spec.q_budget * m ** (-2.0 * spec.beta)


def projection_level(n: int, beta: float) -> int:
    """``ceil(n^(1/(2 beta + 1)))``; infinite beta gives 1."""
    if math.isinf(beta):
        return 1
    return int(math.ceil(n ** (1.0 / (2.0 * beta + 1.0)) - 1e-12))


def regular_design_points(n: int) -> np.ndarray:
    return np.arange(n) / n


def projection_estimator(y, beta: float) -> FourierFunction:
    """Least squares on the first ``M = ceil(n^(1/(2 beta+1)))`` basis functions.

    Responses are taken at ``x_i = (i-1)/n``; there the design is
    orthogonal, so the fit is ``Phi^T Y / n`` restricted to ``j <= M``.
    """
    y = as_vector(y, "y")
    n = y.size
    m = projection_level(n, beta)
    if m >= n:
        raise InvalidInput(f"truncation level {m} needs at least {m + 1} observations")
    return FourierFunction(regular_design_coefficients(y, m))


def adaptive_estimator(y, method: str, tuning: TuningParameters) -> FourierFunction:
    """BIC or Lasso over the first ``n-1`` basis functions, computed by thresholding.

    On the regular design BIC keeps ``Phi^T Y/n`` coordinates above ``tau``
    (hard thresholding) and the Lasso shrinks them by ``tau`` (soft
    thresholding). The smoothness is never used.
    """
    y = as_vector(y, "y")
    n = y.size
    if n < 4:
        raise InvalidInput("need at least 4 observations")
    z = regular_design_coefficients(y, n - 1)
    if method == "bic":
        coef = threshold_estimate(z, tuning.tau / 2, "hard")
    elif method == "lasso":
        coef = threshold_estimate(z, tuning.tau / 2, "soft")
    else:
        raise InvalidInput(f"method must be 'bic' or 'lasso', got {method!r}")
    return FourierFunction(coef)


def adaptive_tuning(method: str, sigma: float, n: int, delta: float = 0.05) -> TuningParameters:
    """Default regularization for :func:`adaptive_estimator` over ``n-1`` basis functions.

    Both methods use the orthogonal-design level ``2 sigma sqrt(2 log(2d/delta)/n)``.
    The general-design BIC and dictionary Lasso levels are valid too but
    carry constants that erase most harmonics at moderate ``n``.
    """
    if method in ("bic", "lasso"):
        return TuningParameters.orthogonal_threshold(sigma, n, n - 1, delta)
    raise InvalidInput(f"method must be 'bic' or 'lasso', got {method!r}")


def function_l2_error(est: FourierFunction, truth: FourierFunction) -> float:
    """``|theta_hat - theta*|_2^2`` after zero-padding to a common length."""
    a, b = est.coefficients, truth.coefficients
    m = max(a.size, b.size)
    diff = np.zeros(m)
    diff[: a.size] += a
    diff[: b.size] -= b
    return float(diff @ diff)


def sample_on_regular_design(truth: FourierFunction, n: int) -> np.ndarray:
    """Values ``f((i-1)/n)``, folding frequencies above ``n/2`` onto their aliases."""
    c = truth.coefficients
    # f(x_i) = c_1 + sqrt(2) sum_k (c_{2k} cos + c_{2k+1} sin)(2 pi k (i-1)/n)
    spec = np.zeros(n, dtype=complex)
    if c.size == 0:
        return np.zeros(n)
    spec[0] = c[0] * n
    padded = np.concatenate([c, [0.0]]) if c.size % 2 == 0 else c
    k = np.arange(1, (padded.size - 1) // 2 + 1)
    ck, sk = padded[2 * k - 1], padded[2 * k]
    # sqrt(2)(c cos + s sin) = (sqrt(2)/2)[(c - i s) e^{+i..} + (c + i s) e^{-i..}]
    w = math.sqrt(2) / 2 * n
    np.add.at(spec, k % n, w * (ck - 1j * sk))
    np.add.at(spec, (-k) % n, w * (ck + 1j * sk))
    return np.fft.ifft(spec).real
