"""Entropic optimal transport between representation clouds.

Cost matrices are squared Euclidean distances between rows. The Sinkhorn
solver comes in a plain scaling form (kernel K = exp(-reg * C)) and a
log-domain form that survives large reg * C products. The balancing gradient
treats the coupling as a constant (envelope rule) and differentiates the cost
matrix only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import wasserstein_distance


class SinkhornError(RuntimeError):
    """Raised when the scaling iterations underflow to zero."""


@dataclass
class TransportPlan:
    """Coupling gamma with its target marginals and convergence diagnostics."""

    gamma: np.ndarray        # (n_c, n_t), nonnegative, sums to 1
    p: np.ndarray            # target row marginal
    q: np.ndarray            # target column marginal
    iterations: int
    residual: float          # max inf-norm marginal violation at exit
    converged: bool

    def entropy(self) -> float:
        """Shannon entropy -sum(gamma * log gamma), with 0 log 0 = 0."""
        g = self.gamma[self.gamma > 0]
        return float(-np.sum(g * np.log(g)))


def cost_matrix(Z_c, Z_t) -> np.ndarray:
    """Pairwise squared Euclidean distances: C[i, j] = ||Z_c[i] - Z_t[j]||^2."""
    Z_c = np.atleast_2d(np.asarray(Z_c, dtype=float))
    Z_t = np.atleast_2d(np.asarray(Z_t, dtype=float))
    if Z_c.shape[0] == 0 or Z_t.shape[0] == 0:
        raise ValueError("both point clouds must be nonempty")
    if Z_c.shape[1] != Z_t.shape[1]:
        raise ValueError(f"column mismatch: {Z_c.shape[1]} vs {Z_t.shape[1]}")
    sq_c = np.sum(Z_c * Z_c, axis=1)[:, None]
    sq_t = np.sum(Z_t * Z_t, axis=1)[None, :]
    C = sq_c + sq_t - 2.0 * (Z_c @ Z_t.T)
    np.maximum(C, 0.0, out=C)
    return C


def _marginal_residual(gamma, p, q) -> float:
    return float(max(np.max(np.abs(gamma.sum(axis=1) - p)),
                     np.max(np.abs(gamma.sum(axis=0) - q))))


def sinkhorn(C, reg, p=None, q=None, max_iter=1000, tol=1e-6,
             log_domain=False) -> TransportPlan:
    """Entropy-regularized transport plan via Sinkhorn scaling iterations.

    reg is the inverse-temperature multiplying the cost in the kernel
    K = exp(-reg * C). Marginals default to uniform. Iterates the scaling
    updates v = q / (K^T u), u = p / (K v) until both marginal residuals drop
    below tol (inf-norm) or max_iter is hit; the plan is returned either way
    with its residual recorded.

    Raises SinkhornError on scaling underflow; pass log_domain=True (or lower
    reg) to avoid it.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.size == 0:
        raise ValueError("cost matrix must be a nonempty 2-D array")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    if reg <= 0:
        raise ValueError("reg must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_c, n_t = C.shape
    p = np.full(n_c, 1.0 / n_c) if p is None else np.asarray(p, dtype=float)
    q = np.full(n_t, 1.0 / n_t) if q is None else np.asarray(q, dtype=float)
    if p.shape != (n_c,) or q.shape != (n_t,):
        raise ValueError("marginal shapes do not match the cost matrix")
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("marginals must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("marginals must each sum to 1")

    if log_domain:
        return _sinkhorn_log(C, reg, p, q, max_iter, tol)

    K = np.exp(-reg * C)
    u = np.ones(n_c)
    gamma = None
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        Ktu = K.T @ u
        if np.any(Ktu == 0.0):
            raise SinkhornError(
                "K^T u underflowed to zero; lower reg or use log_domain=True")
        v = q / Ktu
        Kv = K @ v
        if np.any(Kv == 0.0):
            raise SinkhornError(
                "K v underflowed to zero; lower reg or use log_domain=True")
        u = p / Kv
        gamma = u[:, None] * K * v[None, :]
        residual = _marginal_residual(gamma, p, q)
        if residual < tol:
            break
    return TransportPlan(gamma=gamma, p=p, q=q, iterations=it,
                         residual=residual, converged=residual < tol)


def _sinkhorn_log(C, reg, p, q, max_iter, tol) -> TransportPlan:
    from scipy.special import logsumexp

    logK = -reg * C
    log_p = np.log(p)
    log_q = np.log(q)
    f = np.zeros(C.shape[0])
    g = np.zeros(C.shape[1])
    gamma = None
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = log_q - logsumexp(logK + f[:, None], axis=0)
        f = log_p - logsumexp(logK + g[None, :], axis=1)
        gamma = np.exp(f[:, None] + logK + g[None, :])
        residual = _marginal_residual(gamma, p, q)
        if residual < tol:
            break
    return TransportPlan(gamma=gamma, p=p, q=q, iterations=it,
                         residual=residual, converged=residual < tol)


def transport_cost(C, plan: TransportPlan) -> float:
    """Frobenius inner product <C, gamma>."""
    C = np.asarray(C, dtype=float)
    if C.shape != plan.gamma.shape:
        raise ValueError("cost and plan shapes disagree")
    return float(np.sum(C * plan.gamma))


def balancing_gradient(plan: TransportPlan, Z_c, Z_t):
    """Gradient of <C(Z_c, Z_t), gamma> w.r.t. the clouds, gamma held fixed.

    d/dZ_c[i] = sum_j 2 gamma[i, j] (Z_c[i] - Z_t[j]), and the mirrored form
    for Z_t.
    """
    Z_c = np.atleast_2d(np.asarray(Z_c, dtype=float))
    Z_t = np.atleast_2d(np.asarray(Z_t, dtype=float))
    gamma = plan.gamma
    if gamma.shape != (Z_c.shape[0], Z_t.shape[0]) or Z_c.shape[1] != Z_t.shape[1]:
        raise ValueError("plan and cloud shapes disagree")
    row = gamma.sum(axis=1)
    col = gamma.sum(axis=0)
    d_c = 2.0 * (row[:, None] * Z_c - gamma @ Z_t)
    d_t = 2.0 * (col[:, None] * Z_t - gamma.T @ Z_c)
    return d_c, d_t


def wasserstein_1d(a, b) -> float:
    """First Wasserstein distance between two empirical sample lists."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both sample lists must be nonempty")
    return float(wasserstein_distance(a, b))
