"""Shift operator, smoothing-kernel weights, and the per-row quadratic solve.

Conventions
-----------
Data is stored with the measurement axis last: a matrix ``(M, N)`` holds N
columns of length M, a video tensor ``(M1, M2, N)`` holds N frames. Shift
vectors are integer arrays of shape ``(N,)`` for matrices and ``(N, 2)`` for
videos; shifts are cyclic. ``mu = math.inf`` is a legal regularisation value
and always means "force all columns equal", never "a large float".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import thomas_solve

INF = math.inf


def as_data(d) -> np.ndarray:
    """Validate and convert measurement data to a float64 array."""
    a = np.asarray(d, dtype=np.float64)
    if a.ndim not in (2, 3):
        raise ValueError(f"data must be 2-D (M, N) or 3-D (M1, M2, N), got shape {a.shape}")
    if a.size == 0:
        raise ValueError("data must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("data contains non-finite entries")
    return a


def normalize_columns(d) -> np.ndarray:
    """Scale every measurement to unit 2-norm (zero measurements stay zero)."""
    a = as_data(d)
    flat = a.reshape(-1, a.shape[-1])
    norms = np.linalg.norm(flat, axis=0)
    norms[norms == 0] = 1.0
    return (flat / norms).reshape(a.shape)


def is_normalized(d, atol=1e-12) -> bool:
    flat = np.asarray(d).reshape(-1, np.shape(d)[-1])
    return bool(np.all(np.linalg.norm(flat, axis=0) <= 1.0 + atol))


def as_shifts(lam, n: int, dims: int) -> np.ndarray:
    lam = np.asarray(lam)
    if lam.ndim == 0:
        lam = np.full((n, dims) if dims > 1 else (n,), int(lam))
    if not np.issubdtype(lam.dtype, np.integer):
        if not np.all(lam == np.round(lam)):
            raise ValueError("shifts must be integers")
    lam = lam.astype(np.int64)
    expected = (n,) if dims == 1 else (n, dims)
    if lam.shape != expected:
        raise ValueError(f"shift vector shape {lam.shape} does not match {expected}")
    return lam


def lipschitz_ok(lam, c: int) -> bool:
    """True when consecutive shifts differ by at most ``c`` (per component)."""
    lam = np.asarray(lam)
    if lam.shape[0] < 2:
        return True
    return bool(np.all(np.abs(np.diff(lam, axis=0)) <= c))


@dataclass(frozen=True)
class ObjectEstimate:
    """One extracted object ``S_lam(u)`` and the objective value it attains."""

    u: np.ndarray
    lam: np.ndarray
    objective: float
    info: dict = field(default_factory=dict, repr=False, compare=False)

    def assemble(self) -> np.ndarray:
        return shift_columns(self.u, self.lam)

    @property
    def energy(self) -> float:
        return float(np.sum(self.u**2))


# --------------------------------------------------------------------------
# shift operator


def shift_columns(a, lam) -> np.ndarray:
    """Cyclically rotate measurement k of ``a`` by ``lam[k]``.

    For a matrix, column k is rolled downward by ``lam[k]`` (the k-th power of
    the cyclic down-shift matrix). For a video tensor each frame is rolled by
    the pair ``lam[k] = (rows, cols)``.
    """
    a = np.asarray(a, dtype=np.float64)
    dims = a.ndim - 1
    n = a.shape[-1]
    lam = as_shifts(lam, n, dims)
    out = np.empty_like(a)
    if dims == 1:
        m = a.shape[0]
        rows = (np.arange(m)[:, None] - lam[None, :]) % m
        return np.take_along_axis(a, rows, axis=0)
    for k in range(n):
        out[..., k] = np.roll(a[..., k], tuple(int(s) for s in lam[k]), axis=(0, 1))
    return out


# --------------------------------------------------------------------------
# kernel weights: entries of (I + mu T)^{-1}


def penalty_matrix(n: int) -> np.ndarray:
    """Dense second-difference matrix ``T`` with zero row sums (tests and oracles)."""
    t = np.zeros((n, n))
    if n == 1:
        return t
    i = np.arange(n - 1)
    t[i, i] += 1.0
    t[i + 1, i + 1] += 1.0
    t[i, i + 1] = -1.0
    t[i + 1, i] = -1.0
    return t


def phi_of_mu(mu: float) -> float:
    if not 0 < mu < INF:
        raise ValueError("phi is defined for 0 < mu < inf")
    return math.acosh(1.0 + 1.0 / (2.0 * mu))


def kernel_entry_hyperbolic(j, k, n: int, mu: float):
    """Closed-form hyperbolic expression for ``((I + mu T)^{-1})_{jk}``, 1-based.

    Kept for theory checks. Numerator and denominator grow like
    ``exp(n * phi)``; an overflow raises :class:`OverflowError` rather than
    returning ``inf``/``nan``.
    """
    if not 0 < mu < INF:
        raise ValueError("hyperbolic form requires 0 < mu < inf")
    j = np.asarray(j, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if n == 1:
        return np.ones(np.broadcast(j, k).shape)[()] * 1.0
    phi = phi_of_mu(mu)
    try:
        with np.errstate(over="raise", invalid="raise"):
            num = np.cosh((n + 1 - j - k) * phi) + np.cosh((n - np.abs(j - k)) * phi)
            den = 2.0 * mu * math.sinh(phi) * np.sinh(n * phi)
            val = num / den
    except (FloatingPointError, OverflowError) as exc:
        raise OverflowError(
            f"hyperbolic kernel overflows for n={n}, mu={mu} (n*phi={n * phi:.1f}); "
            "use kernel_entry_spectral"
        ) from exc
    if not np.all(np.isfinite(val)):
        raise OverflowError(f"hyperbolic kernel overflows for n={n}, mu={mu}")
    return val[()] if np.ndim(val) == 0 else val


def kernel_entry_spectral(j, k, n: int, mu: float):
    """Cosine-series expression for ``((I + mu T)^{-1})_{jk}``, 1-based indices.

    This is the production path: every term is bounded, so there is no
    cancellation for large ``n``. Accepts broadcastable index arrays.
    """
    j = np.asarray(j, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    shape = np.broadcast(j, k).shape
    if mu == INF:
        return np.full(shape, 1.0 / n)[()]
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if n == 1:
        return np.ones(shape)[()]
    ell = np.arange(1, n, dtype=np.float64)
    denom = 1.0 + 4.0 * mu * np.sin(ell * np.pi / (2 * n)) ** 2
    jj = j[..., None]
    kk = k[..., None]
    terms = (np.cos(ell * (jj - kk) * np.pi / n) + np.cos(ell * (jj + kk - 1) * np.pi / n)) / denom
    return (1.0 / n + terms.sum(axis=-1) / n)[()]


@dataclass(frozen=True)
class KernelWeights:
    """Band of ``(I + mu T)^{-1}``: ``band[i, q]`` is the weight of columns i and i - q."""

    n: int
    mu: float
    band_width: int
    band: np.ndarray = field(repr=False)
    phi: float | None = None

    def weight(self, j: int, k: int) -> float:
        """Weight of 0-based columns j, k; zero outside the stored band."""
        q = abs(j - k)
        if q > self.band_width:
            return 0.0
        return float(self.band[max(j, k), q])

    def dense(self) -> np.ndarray:
        """Banded weights as a full symmetric matrix (zeros outside the band)."""
        w = np.zeros((self.n, self.n))
        idx = np.arange(self.n)
        for q in range(self.band_width + 1):
            w[idx[q:], idx[q:] - q] = self.band[q:, q]
            w[idx[q:] - q, idx[q:]] = self.band[q:, q]
        return w

    @property
    def diagonal(self) -> np.ndarray:
        return self.band[:, 0]


def build_kernel(n: int, mu: float, k_band: int) -> KernelWeights:
    if n < 1:
        raise ValueError("n must be positive")
    k_band = int(min(max(k_band, 0), n - 1))
    band = np.zeros((n, k_band + 1))
    phi = phi_of_mu(mu) if 0 < mu < INF else None
    rows = np.arange(n)
    # rows in chunks keep the (rows, band, n) cosine tensor bounded
    chunk = max(1, 4_000_000 // max(1, (k_band + 1) * n))
    for start in range(0, n, chunk):
        i = rows[start:start + chunk, None]
        q = np.arange(k_band + 1)[None, :]
        vals = kernel_entry_spectral(i + 1, i - q + 1, n, mu)
        # exact entries are positive; the cosine sum leaves ~1e-15 round-off on tiny ones
        band[start:start + chunk] = np.where(i - q >= 0, np.maximum(vals, 0.0), 0.0)
    if mu == 0:
        band[:, 0] = 1.0
        band[:, 1:] = 0.0
    return KernelWeights(n=n, mu=mu, band_width=k_band, band=band, phi=phi)


# --------------------------------------------------------------------------
# quadratic solve and penalty


def total_change(u) -> float:
    """Sum of squared distances between consecutive measurements."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] < 2:
        return 0.0
    return float(np.sum(np.diff(u, axis=-1) ** 2))


def system_diagonals(n: int, mu: float):
    """Diagonal and off-diagonal of ``I + mu T``."""
    diag = np.full(n, 1.0 + 2.0 * mu)
    if n == 1:
        return np.ones(1), np.zeros(0)
    diag[0] = diag[-1] = 1.0 + mu
    return diag, np.full(n - 1, -mu)


def mean_projection(d, lam) -> np.ndarray:
    """Solution for ``mu = inf``: every measurement replaced by the aligned mean."""
    aligned = shift_columns(d, -np.asarray(lam))
    mean = aligned.mean(axis=-1, keepdims=True)
    return np.broadcast_to(mean, aligned.shape).copy()


def solve_shifted_quadratic(d, lam, mu: float, backend=None) -> np.ndarray:
    """Minimiser ``U`` of ``||S_{-lam}(D) - U||_F^2 + mu * total_change(U)``.

    Each row (pixel) of the aligned data is an independent system with the
    matrix ``I + mu T``, solved with a linear-time tridiagonal sweep.
    """
    if mu == INF:
        return mean_projection(d, lam)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    aligned = shift_columns(d, -np.asarray(lam))
    if mu == 0:
        return aligned
    shape = aligned.shape
    rows = aligned.reshape(-1, shape[-1])
    diag, off = system_diagonals(shape[-1], mu)
    return thomas_solve(diag, off, rows, backend=backend).reshape(shape)
