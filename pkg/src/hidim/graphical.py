"""Graphical lasso and Ising models without external field.

The Ising law is ``P(z) = exp(z^T W z - Phi(W))`` on ``{-1, 1}^d`` with ``W``
symmetric and zero on the diagonal. Since ``z^T W z`` counts every edge
twice, flipping ``z_j`` changes the exponent by ``4 z_j (W z)_j`` and

    P(z_j = s | z_{-j}) = 1 / (1 + exp(-4 s (W z)_j)).

Sampling and pseudo-likelihood estimation below both use this exact
conditional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datagen import RngLike, as_generator
from .errors import InvalidInput
from .linalg import as_matrix, as_vector
from .sparse import project_l1_ball

MAX_ENUMERATION_DIM = 16


# ---------------------------------------------------------------------------
# graphical lasso


@dataclass
class PrecisionEstimate:
    theta: np.ndarray
    lam: float
    objective: float
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = True


def _check_square_symmetric(a: np.ndarray, name: str, tol: float = 1e-8) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square")
    if np.max(np.abs(a - a.T), initial=0.0) > tol * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise InvalidInput(f"{name} must be symmetric")
    return (a + a.T) / 2


def _chol_logdet(theta: np.ndarray) -> Optional[float]:
    try:
        c = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def _offdiag_l1(theta: np.ndarray) -> float:
    return float(np.abs(theta).sum() - np.abs(np.diag(theta)).sum())


def glasso_objective(theta, sigma_hat, lam: float) -> float:
    """``Tr(Sigma_hat Theta) - log det Theta + lam |Theta_offdiag|_1``."""
    theta = _check_square_symmetric(as_matrix(theta, "theta"), "theta")
    s = _check_square_symmetric(as_matrix(sigma_hat, "sigma_hat"), "sigma_hat")
    if s.shape != theta.shape:
        raise InvalidInput("theta and sigma_hat must have the same shape")
    logdet = _chol_logdet(theta)
    if logdet is None:
        raise InvalidInput("theta must be positive definite")
    return float(np.sum(s * theta)) - logdet + lam * _offdiag_l1(theta)


def graphical_lasso(sigma_hat, lam: float, max_iter: int = 5000, tol: float = 1e-10) -> PrecisionEstimate:
    """Proximal gradient on the graphical lasso objective.

    The smooth part ``Tr(S Theta) - log det Theta`` has gradient
    ``S - Theta^{-1}``; the prox of the off-diagonal l1 penalty is entrywise
    soft thresholding that leaves the diagonal alone. Each step is halved
    until the candidate is positive definite and satisfies the sufficient
    decrease condition, so the objective never increases. Iteration stops
    once no entry moves by more than ``tol``, or when the objective stalls at
    rounding level.
    """
    s = _check_square_symmetric(as_matrix(sigma_hat, "sigma_hat"), "sigma_hat")
    if lam < 0:
        raise InvalidInput("lambda must be non-negative")
    d = s.shape[0]
    diag = np.diag(s) + lam
    if np.any(diag <= 0):
        raise InvalidInput("sigma_hat + lambda I needs a positive diagonal")
    theta = np.diag(1.0 / diag)
    off = ~np.eye(d, dtype=bool)

    def smooth(th, logdet):
        return float(np.sum(s * th)) - logdet

    logdet = _chol_logdet(theta)
    f = smooth(theta, logdet)
    obj = f + lam * _offdiag_l1(theta)
    history = [obj]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        inv = np.linalg.inv(theta)
        grad = s - (inv + inv.T) / 2
        step = min(step * 2.0, 1e6)
        while True:
            cand = theta - step * grad
            cand[off] = np.sign(cand[off]) * np.maximum(np.abs(cand[off]) - step * lam, 0.0)
            cand = (cand + cand.T) / 2
            cand_logdet = _chol_logdet(cand)
            if cand_logdet is not None:
                diff = cand - theta
                f_cand = smooth(cand, cand_logdet)
                if f_cand <= f + float(np.sum(grad * diff)) + float(np.sum(diff * diff)) / (2 * step) + 1e-15 * abs(f):
                    break
            step /= 2
            if step < 1e-20:
                break
        if step < 1e-20:
            break
        new_obj = f_cand + lam * _offdiag_l1(cand)
        if new_obj > obj:
            # sufficient decrease guarantees this up to rounding; keep the old point
            break
        decrease = obj - new_obj
        moved = float(np.max(np.abs(cand - theta)))
        theta, f, obj = cand, f_cand, new_obj
        history.append(obj)
        if moved <= tol or decrease <= 1e-15 * max(1.0, abs(obj)):
            converged = True
            break
    return PrecisionEstimate(theta, lam, obj, it, history, converged)


def glasso_lambda(n: int, d: int, delta: float = 0.05, c: float = 2.0) -> float:
    """``c sqrt(log(d/delta) / n)``."""
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    return c * math.sqrt(math.log(d / delta) / n)


def sparse_precision(d: int, n_edges: int, weight: float, rng: RngLike) -> np.ndarray:
    """Random symmetric precision with ``n_edges`` off-diagonal pairs and unit-plus diagonal.

    Off-diagonal entries are ``+-weight``; the diagonal is raised until the
    smallest eigenvalue is at least 1/2.
    """
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    if not 0 <= n_edges <= len(pairs):
        raise InvalidInput("too many edges")
    g = as_generator(rng)
    theta = np.eye(d)
    for idx in g.choice(len(pairs), size=n_edges, replace=False):
        i, j = pairs[idx]
        theta[i, j] = theta[j, i] = weight * (2.0 * g.integers(0, 2) - 1.0)
    lo = float(np.linalg.eigvalsh(theta)[0])
    if lo < 0.5:
        theta += (0.5 - lo) * np.eye(d)
    return theta


# ---------------------------------------------------------------------------
# Ising model


@dataclass(frozen=True)
class IsingModel:
    """Symmetric zero-diagonal interactions; rows have l1 norm at most ``lambda_budget``.

    ``beta_bound`` is recorded but not used by any estimator.
    """

    w: np.ndarray
    lambda_budget: Optional[float] = None
    beta_bound: float = math.inf

    def __post_init__(self):
        w = as_matrix(self.w, "w")
        if w.shape[0] != w.shape[1]:
            raise InvalidInput("w must be square")
        if np.any(np.diag(w) != 0):
            raise InvalidInput("w must have a zero diagonal")
        if np.max(np.abs(w - w.T), initial=0.0) > 1e-12:
            raise InvalidInput("w must be symmetric")
        object.__setattr__(self, "w", (w + w.T) / 2)
        rows = float(np.abs(w).sum(axis=1).max(initial=0.0))
        if self.lambda_budget is None:
            object.__setattr__(self, "lambda_budget", rows)
        elif rows > self.lambda_budget + 1e-12:
            raise InvalidInput(f"row l1 norm {rows} exceeds lambda_budget {self.lambda_budget}")

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def all_spin_configurations(d: int) -> np.ndarray:
    """All ``2^d`` points of ``{-1, 1}^d``; row ``i`` is the binary expansion of ``i``."""
    bits = (np.arange(2**d)[:, None] >> np.arange(d - 1, -1, -1)) & 1
    return 2.0 * bits - 1.0


@dataclass(frozen=True)
class IsingTable:
    states: np.ndarray
    probabilities: np.ndarray
    log_partition: float

    def marginal_means(self) -> np.ndarray:
        return self.probabilities @ self.states

    def pair_agreement(self, i: int, j: int) -> float:
        """``P(z_i = z_j)``."""
        return float(self.probabilities[self.states[:, i] == self.states[:, j]].sum())


def ising_enumerate(model: IsingModel) -> IsingTable:
    d = model.dim
    if d > MAX_ENUMERATION_DIM:
        raise InvalidInput(f"enumeration is limited to d <= {MAX_ENUMERATION_DIM}")
    z = all_spin_configurations(d)
    energy = np.einsum("ij,jk,ik->i", z, model.w, z)
    top = energy.max()
    weights = np.exp(energy - top)
    total = weights.sum()
    return IsingTable(z, weights / total, float(top + math.log(total)))


def ising_conditional(model: IsingModel, j: int, z) -> float:
    """``P(z_j = +1 | z_{-j}) = 1 / (1 + exp(-4 (W z)_j))``."""
    z = as_vector(z, "z")
    if z.size != model.dim or not np.all(np.abs(z) == 1):
        raise InvalidInput("z must be a +-1 vector of the model's dimension")
    if not 0 <= j < model.dim:
        raise InvalidInput("index out of range")
    field_j = float(model.w[j] @ z)
    return 1.0 / (1.0 + math.exp(-4.0 * field_j))


def ising_sample_exact(model: IsingModel, n: int, rng: RngLike) -> np.ndarray:
    """``n`` independent draws by inverting the enumerated distribution."""
    table = ising_enumerate(model)
    g = as_generator(rng)
    idx = g.choice(table.states.shape[0], size=n, p=table.probabilities)
    return table.states[idx]


def ising_gibbs(model: IsingModel, burn_in: int, n_samples: int, thin: Optional[int],
                rng: RngLike) -> np.ndarray:
    """Systematic-scan Gibbs sampler started from an all-ones state.

    ``thin`` full sweeps separate consecutive kept samples; ``None`` means ``d``.
    """
    d = model.dim
    thin = d if thin is None else thin
    if burn_in < 0 or n_samples < 0 or thin < 1:
        raise InvalidInput("burn_in, n_samples must be >= 0 and thin >= 1")
    g = as_generator(rng)
    w = model.w
    z = np.ones(d)
    out = np.empty((n_samples, d))
    total = burn_in + n_samples * thin
    kept = 0
    for sweep in range(total):
        u = g.uniform(size=d)
        for j in range(d):
            p_plus = 1.0 / (1.0 + math.exp(-4.0 * float(w[j] @ z)))
            z[j] = 1.0 if u[j] < p_plus else -1.0
        if sweep >= burn_in and (sweep - burn_in + 1) % thin == 0:
            out[kept] = z
            kept += 1
    return out


def _check_spins(samples) -> np.ndarray:
    x = as_matrix(samples, "samples")
    if not np.all(np.abs(x) == 1):
        raise InvalidInput("samples must have +-1 entries")
    return x


def _log_sigmoid(t: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -t)


def pseudo_loglik(samples, j: int, w) -> float:
    """Average conditional log-likelihood of column ``j`` given the others, ``w`` of length ``d-1``."""
    x = _check_spins(samples)
    y = x[:, j]
    pred = np.delete(x, j, axis=1)
    return float(np.mean(_log_sigmoid(4.0 * y * (pred @ as_vector(w, "w")))))


def ising_row_mle(samples, j: int, lam: float, max_iter: int = 10_000, tol: float = 1e-8) -> np.ndarray:
    """Maximizer of the node-``j`` pseudo-likelihood over the l1 ball of radius ``lam``.

    Projected gradient ascent with step ``1/L``, ``L = 4 |X|_op^2 / n`` where
    ``X`` holds the other columns. Stops when ``L |w_next - w|_2 <= tol``.
    """
    x = _check_spins(samples)
    n, d = x.shape
    if not 0 <= j < d:
        raise InvalidInput("index out of range")
    if lam < 0:
        raise InvalidInput("lambda must be non-negative")
    y = x[:, j]
    pred = np.delete(x, j, axis=1)
    w = np.zeros(d - 1)
    if lam == 0 or d == 1:
        return w
    L = 4.0 * float(np.linalg.norm(pred, 2)) ** 2 / n
    yx = pred * y[:, None]
    for _ in range(max_iter):
        margin = 4.0 * (yx @ w)
        # d/dw log sigmoid(4 y x.w) = 4 y x (1 - sigmoid(4 y x.w))
        grad = 4.0 * (yx.T @ (1.0 / (1.0 + np.exp(margin)))) / n
        new = project_l1_ball(w + grad / L, lam)
        step = L * float(np.linalg.norm(new - w))
        w = new
        if step <= tol:
            break
    return w


def ising_fit(samples, lam: float, max_iter: int = 10_000, tol: float = 1e-8) -> IsingModel:
    """Row-wise pseudo-likelihood estimates placed off the diagonal, then symmetrized."""
    x = _check_spins(samples)
    d = x.shape[1]
    w = np.zeros((d, d))
    for j in range(d):
        others = [k for k in range(d) if k != j]
        w[j, others] = ising_row_mle(x, j, lam, max_iter, tol)
    w = (w + w.T) / 2
    return IsingModel(w, max(lam, float(np.abs(w).sum(axis=1).max(initial=0.0))))
