"""Trigonometric basis and Sobolev weights (vectorized helpers)."""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


def trig_basis_matrix(x, m: int) -> np.ndarray:
    """``Phi[i, j-1] = phi_j(x_i)`` for ``j = 1..m``.

    ``phi_1 = 1``, ``phi_{2k} = sqrt(2) cos(2 pi k x)``, ``phi_{2k+1} = sqrt(2) sin(2 pi k x)``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    out = np.empty((x.size, m))
    if m == 0:
        return out
    out[:, 0] = 1.0
    j = np.arange(2, m + 1)
    k = j // 2
    arg = 2 * np.pi * np.outer(x, k)
    even = (j % 2) == 0
    out[:, 1:][:, even] = SQRT2 * np.cos(arg[:, even])
    out[:, 1:][:, ~even] = SQRT2 * np.sin(arg[:, ~even])
    return out


def sobolev_weights(m: int, beta: float) -> np.ndarray:
    """``a_j`` for ``j = 1..m``: ``j**beta`` for even j, ``(j-1)**beta`` for odd j.

    ``a_1`` is reported as 1 (the raw formula gives 0, which would leave the
    constant coefficient unbudgeted).
    """
    j = np.arange(1, m + 1, dtype=float)
    base = np.where(j % 2 == 0, j, j - 1)
    a = np.power(base, beta, where=base > 0, out=np.zeros_like(base))
    if m:
        a[0] = 1.0
    return a


def regular_design_coefficients(y, m: int) -> np.ndarray:
    """``Phi^T y / n`` on the regular design ``x_i = (i-1)/n`` via one FFT."""
    y = np.asarray(y, dtype=float)
    n = y.size
    spec = np.fft.rfft(y)
    out = np.empty(m)
    if m == 0:
        return out
    out[0] = spec[0].real / n
    j = np.arange(2, m + 1)
    k = j // 2
    vals = spec[k]
    even = (j % 2) == 0
    # cos terms use Re, sin terms use -Im of sum y_i exp(-2 pi i k (i-1)/n)
    out[1:] = np.where(even, SQRT2 * vals.real / n, -SQRT2 * vals.imag / n)
    return out
