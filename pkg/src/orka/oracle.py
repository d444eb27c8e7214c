"""Brute-force reference solvers and the truncation error bounds.

Everything here is deliberately independent of the graph search: shift
vectors are enumerated exhaustively and objectives are evaluated either
from the correlation tables or from dense linear algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import INF, as_data, build_kernel, penalty_matrix, phi_of_mu, shift_columns, total_change
from .graph import MoveSet
from .objective import correlate_band

DEFAULT_ENUMERATION_BUDGET = 10**8


class EnumerationBudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"brute force needs {count} shift vectors, budget is {budget}")


def dense_kernel(n: int, mu: float) -> np.ndarray:
    """``(I + mu T)^{-1}`` by Gaussian elimination on the assembled matrix."""
    if mu == INF:
        return np.full((n, n), 1.0 / n)
    return np.linalg.solve(np.eye(n) + mu * penalty_matrix(n), np.eye(n))


def _count(n: int, n_moves: int, budget: int) -> int:
    count = n_moves ** (n - 1)
    if count > budget:
        raise EnumerationBudgetExceeded(count, budget)
    return count


def iter_shift_vectors(n: int, c: int, dims: int = 1, chunk: int = 1 << 15, budget: int = DEFAULT_ENUMERATION_BUDGET):
    """Yield blocks of anchored C-Lipschitz shift vectors in odometer order.

    The first increment is the slowest digit and each digit runs from the
    most negative increment upward. Blocks have shape (b, N) or (b, N, 2).
    """
    steps = MoveSet(dims, c).steps
    n_moves = steps.shape[0]
    total = _count(n, n_moves, budget)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, n - 1), dtype=np.int64)
        rest = idx
        for t in range(n - 2, -1, -1):
            rest, digits[:, t] = np.divmod(rest, n_moves)
        inc = steps[digits]  # (b, N-1, dims)
        lam = np.concatenate([np.zeros((idx.size, 1, dims), dtype=np.int64), np.cumsum(inc, axis=1)], axis=1)
        yield lam[..., 0] if dims == 1 else lam


def brute_force_best_lambda(d, mu: float, c: int, k_band: int, budget: int = DEFAULT_ENUMERATION_BUDGET):
    """Exhaustive maximiser of ``tau_K`` over anchored C-Lipschitz shift vectors.

    Returns ``(lam, value)``; ties keep the first vector in odometer order.
    """
    a = as_data(d)
    dims = a.ndim - 1
    n = a.shape[-1]
    k_band = min(k_band, n - 1)
    band = correlate_band(a, c, k_band, method="direct")
    kernel = build_kernel(n, mu, k_band)
    diag_term = float(kernel.diagonal @ band.diag)
    if n == 1:
        lam = np.zeros((1,) if dims == 1 else (1, dims), dtype=np.int64)
        return lam, diag_term
    best_val = -np.inf
    best_lam = None
    for lam in iter_shift_vectors(n, c, dims, budget=budget):
        vals = np.zeros(lam.shape[0])
        for q in range(1, k_band + 1):
            idx = band.lag_index(q, lam[:, q:] - lam[:, :-q])
            rows = np.arange(n - q)
            vals += band.tables[q][rows[None, :], idx] @ kernel.band[q:, q]
        vals = diag_term + 2.0 * vals
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_lam = lam[j].copy()
    return best_lam, best_val


def tau_explicit(lam, d, mu: float, k: int) -> float:
    """``tau_K`` from explicitly shifted columns and the dense inverse."""
    a = as_data(d)
    n = a.shape[-1]
    aligned = shift_columns(a, -np.asarray(lam)).reshape(-1, n)
    gram = aligned.T @ aligned
    w = dense_kernel(n, mu)
    jj, kk = np.indices((n, n))
    return float(np.sum(np.where(np.abs(jj - kk) <= k, w * gram, 0.0)))


def objective_dense(lam, d, mu: float):
    """Optimal U at fixed ``lam`` via a dense solve, and the attained value."""
    a = as_data(d)
    n = a.shape[-1]
    aligned = shift_columns(a, -np.asarray(lam))
    rows = aligned.reshape(-1, n)
    if mu == INF:
        u = np.repeat(rows.mean(axis=1, keepdims=True), n, axis=1)
        value = float(np.sum((rows - u) ** 2))
    else:
        u = np.linalg.solve(np.eye(n) + mu * penalty_matrix(n), rows.T).T
        value = float(np.sum((rows - u) ** 2)) + mu * total_change(u)
    return u.reshape(a.shape), value


def brute_force_min_objective(d, mu: float, c: int, budget: int = 10**6):
    """Global minimum of the joint (U, lam) problem by enumeration and dense solves."""
    a = as_data(d)
    dims = a.ndim - 1
    best = (None, INF)
    for block in iter_shift_vectors(a.shape[-1], c, dims, budget=budget):
        for lam in block:
            _, value = objective_dense(lam, a, mu)
            if value < best[1]:
                best = (lam.copy(), value)
    return best


# --------------------------------------------------------------------------
# error bounds


def _log_sinh(x: float) -> float:
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)


def g_factor(mu: float, n: int) -> float:
    """``1 / (mu sinh(phi) sinh(n phi))``, evaluated in log space."""
    phi = phi_of_mu(mu)
    return math.exp(-math.log(mu) - _log_sinh(phi) - _log_sinh(n * phi))


@dataclass(frozen=True)
class ErrorBoundReport:
    n: int
    k: int
    mu: float
    phi: float
    g: float
    corollary_exp: float    # per-vector truncation bound, exponential form
    corollary_gauss: float  # per-vector truncation bound, Gaussian form
    bound_exp: float        # optimality gap bound, twice corollary_exp
    bound_gauss: float      # optimality gap bound, twice corollary_gauss
    lower: float            # attainable truncation error for some matrices

    @property
    def theorem_bound(self) -> float:
        return min(self.bound_exp, self.bound_gauss)


def error_bounds(n: int, k: int, mu: float) -> ErrorBoundReport:
    if not 0 < mu < INF:
        raise ValueError("error bounds need 0 < mu < inf")
    if not 0 <= k < n - 1:
        raise ValueError("error bounds need K < N - 1; at K = N - 1 the truncation is exact")
    phi = phi_of_mu(mu)
    g = g_factor(mu, n)
    gap = n - k
    log_base = math.log(g) + 2.0 * math.log(gap) if g > 0 else -INF

    def safe_exp(x):
        return math.exp(x) if x < 700 else INF

    cor_exp = safe_exp(log_base + gap * phi)
    cor_gauss = 0.5 * safe_exp(log_base + (gap * phi) ** 2 / 2.0)
    lower = safe_exp(log_base + gap * phi / 2.0) / 8.0
    return ErrorBoundReport(
        n=n, k=k, mu=mu, phi=phi, g=g,
        corollary_exp=cor_exp, corollary_gauss=cor_gauss,
        bound_exp=2.0 * cor_exp, bound_gauss=2.0 * cor_gauss, lower=lower,
    )


def out_of_band_sum(n: int, k: int, mu: float) -> float:
    """Sum of kernel entries farther than K from the diagonal."""
    w = build_kernel(n, mu, n - 1).dense()
    jj, kk = np.indices((n, n))
    return float(w[np.abs(jj - kk) > k].sum())


@dataclass(frozen=True)
class TheoremCheck:
    left: float
    right: float
    holds: bool
    lam_full: np.ndarray
    lam_k: np.ndarray
    report: ErrorBoundReport | None


def verify_theorem(d, mu: float, c: int, k: int, tol: float = 1e-9, lam_k=None) -> TheoremCheck:
    """Compare the optimality gap of the best K-approximation with its bound.

    ``lam_k`` may supply the K-approximation maximiser (for example from the
    graph search); otherwise it is found by brute force as well.
    """
    a = as_data(d)
    n = a.shape[-1]
    if not np.all(np.linalg.norm(a.reshape(-1, n), axis=0) <= 1.0 + 1e-12):
        raise ValueError("the bound assumes measurements with norm at most 1")
    k = min(k, n - 1)
    lam_full, best = brute_force_best_lambda(a, mu, c, n - 1)
    if lam_k is None:
        lam_k, _ = brute_force_best_lambda(a, mu, c, k)
    band = correlate_band(a, c, n - 1, method="direct")
    kernel = build_kernel(n, mu, n - 1)
    from .objective import tau_k

    left = best - tau_k(lam_k, band, kernel)
    if k >= n - 1:
        return TheoremCheck(left=left, right=0.0, holds=abs(left) <= tol, lam_full=lam_full, lam_k=np.asarray(lam_k), report=None)
    rep = error_bounds(n, k, mu)
    return TheoremCheck(
        left=left, right=rep.theorem_bound, holds=left <= rep.theorem_bound + tol,
        lam_full=lam_full, lam_k=np.asarray(lam_k), report=rep,
    )
