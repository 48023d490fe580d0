"""Seeded generation of noise, designs, structured truths and model samples.

Every sampler takes ``rng`` which may be a :class:`RandomSource` token or an
already constructed ``numpy.random.Generator``. A token always maps to the
same generator state, so ``sample_noise(kind, n, RandomSource(1, 7))`` is a
pure function of its arguments. Inside a single trial, build one generator
with ``source.generator()`` and thread it through consecutive calls.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._fourier import sobolev_weights, trig_basis_matrix
from .errors import InvalidInput
from .linalg import as_matrix, as_vector

_MASK64 = (1 << 64) - 1


def stream_id(*parts) -> int:
    """Stable 64-bit stream identifier derived from arbitrary hashable parts."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RandomSource:
    """Immutable ``(master_seed, stream_id)`` token naming one random stream."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, *parts) -> "RandomSource":
        return RandomSource(self.master_seed, stream_id(self.stream_id, *parts))


RngLike = Union[RandomSource, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    raise InvalidInput(f"expected RandomSource or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True)
class NoiseKind:
    """A sub-Gaussian noise family with variance proxy ``sigma**2``.

    ``uniform`` draws from ``[-sigma, sigma]``; Hoeffding's lemma certifies
    the proxy ``sigma**2`` (its variance is only ``sigma**2 / 3``).
    """

    tag: str
    sigma: float = 1.0

    def __post_init__(self):
        if self.tag not in ("gaussian", "rademacher", "uniform"):
            raise InvalidInput(f"unknown noise kind {self.tag!r}")
        if not self.sigma >= 0:
            raise InvalidInput("sigma must be non-negative")

    @property
    def half_range(self) -> float:
        """Half-width of an interval whose Hoeffding proxy equals ``sigma**2``."""
        return self.sigma


@dataclass
class RegressionInstance:
    """``response = design @ truth + noise``; truth may be unknown."""

    design: np.ndarray
    response: np.ndarray
    truth: Optional[np.ndarray] = None
    sigma: float = 0.0

    def __post_init__(self):
        self.design = as_matrix(self.design, "design")
        self.response = as_vector(self.response, "response")
        if self.response.size != self.design.shape[0]:
            raise InvalidInput(
                f"design has {self.design.shape[0]} rows, response has {self.response.size}"
            )
        if self.truth is not None:
            self.truth = as_vector(self.truth, "truth")
            if self.truth.size != self.design.shape[1]:
                raise InvalidInput("truth length must equal the number of columns")
        if self.sigma < 0:
            raise InvalidInput("sigma must be non-negative")

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def d(self) -> int:
        return self.design.shape[1]


def sample_noise(kind: NoiseKind, n: int, rng: RngLike) -> np.ndarray:
    if n < 1:
        raise InvalidInput("n must be at least 1")
    g = as_generator(rng)
    s = kind.sigma
    if kind.tag == "gaussian":
        z = g.standard_normal(n)
    elif kind.tag == "rademacher":
        z = g.integers(0, 2, size=n) * 2.0 - 1.0
    else:
        z = g.uniform(-1.0, 1.0, size=n)
    return s * z


def make_instance(design, truth, kind: NoiseKind, rng: RngLike) -> RegressionInstance:
    design = as_matrix(design, "design")
    truth = as_vector(truth, "truth")
    y = design @ truth + sample_noise(kind, design.shape[0], rng)
    return RegressionInstance(design, y, truth, kind.sigma)


def gaussian_design(n: int, d: int, rng: RngLike) -> np.ndarray:
    return as_generator(rng).standard_normal((n, d))


def rademacher_design(n: int, d: int, rng: RngLike) -> np.ndarray:
    """``n x d`` matrix of iid signs; every column has norm exactly ``sqrt(n)``."""
    if n < 1 or d < 1:
        raise InvalidInput("n and d must be positive")
    return as_generator(rng).integers(0, 2, size=(n, d)) * 2.0 - 1.0


def regular_trig_design(n: int, m: int) -> np.ndarray:
    """``Phi[i, j] = phi_{j+1}((i-1)/n)``; satisfies ``Phi^T Phi = n I`` for ``m <= n-1``."""
    if m >= n:
        raise InvalidInput(f"need m <= n - 1, got m={m}, n={n}")
    if m < 1:
        raise InvalidInput("m must be positive")
    return trig_basis_matrix(np.arange(n) / n, m)


def sparse_truth(d: int, k: int, amplitude: float, rng: RngLike) -> np.ndarray:
    """Exactly ``k`` nonzeros at random positions with magnitudes ``amplitude * (1 + |N(0,1)|)``."""
    if not 0 <= k <= d:
        raise InvalidInput(f"need 0 <= k <= d, got k={k}, d={d}")
    if amplitude <= 0 and k > 0:
        raise InvalidInput("amplitude must be positive")
    g = as_generator(rng)
    theta = np.zeros(d)
    if k == 0:
        return theta
    support = g.choice(d, size=k, replace=False)
    signs = g.integers(0, 2, size=k) * 2.0 - 1.0
    theta[support] = signs * amplitude * (1.0 + np.abs(g.standard_normal(k)))
    return theta


def spiked_covariance_sample(n: int, d: int, theta: float, v, rng: RngLike) -> np.ndarray:
    """``n`` Gaussian rows with covariance ``theta * v v^T + I_d``."""
    v = as_vector(v, "v")
    if v.size != d:
        raise InvalidInput("v must have length d")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise InvalidInput("v must be a unit vector")
    if theta < 0:
        raise InvalidInput("theta must be non-negative")
    g = as_generator(rng)
    z = g.standard_normal((n, d))
    spike = g.standard_normal(n)
    return z + math.sqrt(theta) * np.outer(spike, v)


def sobolev_truth(beta: float, q_budget: float, n_coeffs: int, rng: RngLike) -> np.ndarray:
    """Random Fourier coefficients on the boundary of the Sobolev ellipsoid.

    Coefficient ``j`` gets a random sign and magnitude ``u_j / (a_j sqrt(j))``
    with ``u_j ~ U[1/2, 3/2]``, then the vector is rescaled so that
    ``sum a_j^2 theta_j^2 = Q``. The ``j**-1/2`` profile spreads the budget
    over all frequencies, which is what makes the truncation bias of order
    ``M**(-2 beta)`` rather than much smaller.
    """
    if beta <= 0.5:
        raise InvalidInput("beta must exceed 1/2")
    if q_budget <= 0:
        raise InvalidInput("Q must be positive")
    if n_coeffs < 1:
        raise InvalidInput("n_coeffs must be positive")
    g = as_generator(rng)
    a = sobolev_weights(n_coeffs, beta)
    j = np.arange(1, n_coeffs + 1)
    signs = g.integers(0, 2, size=n_coeffs) * 2.0 - 1.0
    raw = signs * g.uniform(0.5, 1.5, size=n_coeffs) / (a * np.sqrt(j))
    scale = math.sqrt(q_budget / float(np.sum(a**2 * raw**2)))
    return raw * scale
