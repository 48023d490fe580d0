"""Dense linear algebra primitives shared by the estimators.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Every public
function validates its input (finite entries, correct dimensionality) and
raises :class:`~hidim.errors.InvalidInput` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

RANK_RTOL = 1e-10


def as_matrix(a, name: str = "a") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be a 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def as_vector(v, name: str = "v") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be a 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``a = u @ diag(singular_values) @ v.T`` truncated to numerical rank."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.u.shape[0], self.v.shape[0])

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        """Sum of the leading ``k`` singular triples (all of them by default)."""
        r = self.rank if k is None else min(max(int(k), 0), self.rank)
        return (self.u[:, :r] * self.singular_values[:r]) @ self.v[:, :r].T


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    # first non-negligible entry of each left vector made non-negative
    for j in range(u.shape[1]):
        col = u[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size and col[idx[0]] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]


def svd(a) -> SvdFactorization:
    """Thin SVD with singular values below ``1e-10 * max(m, n) * s_1`` dropped.

    Signs are fixed so that the first nonzero entry of every left singular
    vector is non-negative.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m == 0 or n == 0:
        return SvdFactorization(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cutoff = RANK_RTOL * max(m, n) * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > cutoff)) if s.size and s[0] > 0 else 0
    u = np.array(u[:, :r])
    v = np.array(vt[:r].T)
    _fix_signs(u, v)
    return SvdFactorization(u, np.array(s[:r]), v)


def singular_values(a) -> np.ndarray:
    """All min(m, n) singular values, non-increasing, zeros included."""
    a = as_matrix(a)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def operator_norm(a) -> float:
    s = singular_values(a)
    return float(s[0]) if s.size else 0.0


def schatten_norm(a, q) -> float:
    """Schatten norm for ``q`` in {1, 2, inf}: nuclear, Frobenius, operator."""
    if q in (1, 1.0):
        return float(np.sum(singular_values(a)))
    if q in (2, 2.0):
        return float(np.linalg.norm(as_matrix(a)))
    if q in ("inf", "op") or (isinstance(q, (int, float)) and np.isinf(q)):
        return operator_norm(a)
    raise InvalidInput(f"unsupported Schatten exponent {q!r}; use 1, 2 or inf")


def truncate_svd(a, k: int) -> np.ndarray:
    """Best rank-``k`` approximation in Frobenius norm (Eckart-Young)."""
    if k < 0:
        raise InvalidInput("k must be non-negative")
    a = as_matrix(a)
    f = svd(a)
    if k >= f.rank:
        return a.copy()
    return f.reconstruct(k)


def hard_threshold_spectrum(a, threshold: float) -> np.ndarray:
    """Keep the singular triples whose singular value is strictly above ``threshold``."""
    if threshold < 0:
        raise InvalidInput("threshold must be non-negative")
    f = svd(a)
    keep = f.singular_values > threshold
    return (f.u[:, keep] * f.singular_values[keep]) @ f.v[:, keep].T


def _check_unit(x: np.ndarray, name: str) -> None:
    if abs(np.linalg.norm(x) - 1.0) > 1e-8:
        raise InvalidInput(f"{name} must have unit Euclidean norm")


def principal_angle_sin(u, v) -> float:
    """Sine of the angle ``arccos(|u.v|)`` between two unit vectors."""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise InvalidInput("u and v must have the same length")
    _check_unit(u, "u")
    _check_unit(v, "v")
    c = min(abs(float(u @ v)), 1.0)
    return float(np.sqrt(max(0.0, 1.0 - c * c)))


def sign_aligned_distance(u, v) -> float:
    """``min over eps in {-1, 1}`` of ``|eps*u - v|_2``.

    Always at most ``sqrt(2) * principal_angle_sin(u, v)``.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise InvalidInput("u and v must have the same length")
    return float(min(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def pseudo_inverse_solve(x, y) -> np.ndarray:
    """Return ``(X^T X)^+ X^T y``, the minimum-norm least squares solution."""
    x = as_matrix(x, "x")
    y = as_vector(y, "y")
    if x.shape[0] != y.shape[0]:
        raise InvalidInput(f"design has {x.shape[0]} rows but response has length {y.size}")
    f = svd(x)
    if f.rank == 0:
        return np.zeros(x.shape[1])
    return f.v @ ((f.u.T @ y) / f.singular_values)


def column_space_projection(x, y) -> np.ndarray:
    """Orthogonal projection of the columns of ``y`` onto the span of ``x``'s columns."""
    x = as_matrix(x, "x")
    y = np.asarray(y, dtype=float)
    if y.shape[0] != x.shape[0]:
        raise InvalidInput("row counts of x and y differ")
    u = svd(x).u
    return u @ (u.T @ y)


def symmetric_eigh(a, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, eigenvalues non-increasing."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > tol * scale:
        raise InvalidInput("matrix is not symmetric")
    w, q = np.linalg.eigh((a + a.T) / 2)
    return w[::-1], q[:, ::-1]
