"""Banded shifted correlations and the truncated correlation objective."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import INF, KernelWeights, as_data, as_shifts, build_kernel, shift_columns, total_change


# relative size (against ||D_j|| ||D_k||) below which FFT correlations are
# indistinguishable from zero
FFT_ZERO_FLOOR = 1e-13


@dataclass(frozen=True)
class CorrelationBand:
    """Correlations ``<D_j, S_s(D_k)>`` for ``0 < j - k <= K`` and ``|s| <= C (j - k)``.

    ``tables[q][k]`` holds the lag window of the pair (k + q, k), flattened
    row-major over the lag components, lag ``-C q`` first. ``tables[0]`` is
    unused. All tables are views into one flat buffer, which is the layout
    the graph kernels read directly (see :attr:`packed`).
    """

    n: int
    band_width: int
    lipschitz: int
    dims: int
    tables: list = field(repr=False)
    diag: np.ndarray = field(repr=False)
    packed: tuple = field(repr=False, compare=False, default=())

    def window(self, q: int) -> int:
        return 2 * self.lipschitz * q + 1

    def lag_index(self, q: int, lag) -> np.ndarray:
        """Flattened table column for lag vectors at offset ``q``."""
        lag = np.asarray(lag, dtype=np.int64)
        half = self.lipschitz * q
        if np.any(np.abs(lag) > half):
            raise ValueError(
                f"shift difference outside the stored lag range +-{half} at offset {q}; "
                "the shift vector violates the Lipschitz bound"
            )
        if self.dims == 1:
            return lag + half
        win = self.window(q)
        return (lag[..., 0] + half) * win + (lag[..., 1] + half)

    def value(self, j: int, k: int, lag) -> float:
        """``<D_j, S_lag(D_k)>`` for 0-based columns with ``0 < |j - k| <= K``."""
        if j < k:
            j, k, lag = k, j, -np.asarray(lag)
        q = j - k
        if not 0 < q <= self.band_width:
            raise ValueError(f"column offset {q} outside band 1..{self.band_width}")
        return float(self.tables[q][k, self.lag_index(q, lag)])

    @property
    def size(self) -> int:
        return int(sum(t.size for t in self.tables[1:]))


def _lag_grid(half: int, dims: int):
    lags = np.arange(-half, half + 1)
    if dims == 1:
        return [(int(s),) for s in lags]
    return [(int(a), int(b)) for a in lags for b in lags]


def correlate_band(d, c: int, k_band: int, method: str = "auto") -> CorrelationBand:
    """Tabulate the shifted correlations needed by the K-approximation.

    ``method='fft'`` computes the full circular cross-correlation of every
    column pair and keeps the needed lags; ``'direct'`` evaluates only the
    needed lags with explicit rolls. ``'auto'`` is the FFT route, which
    was never slower in ``benchmarks/bench_backends.py --corr``; the direct
    route stays as an independent reference.
    """
    a = as_data(d)
    if method not in ("auto", "fft", "direct"):
        raise ValueError(f"unknown correlation method {method!r}")
    c = int(c)
    if c < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    dims = a.ndim - 1
    n = a.shape[-1]
    k_band = int(min(max(k_band, 0), n - 1))
    spatial = a.shape[:-1]
    axes = tuple(range(1, dims + 1))
    x = np.moveaxis(a, -1, 0)  # (N, *spatial)
    diag = np.sum(x.reshape(n, -1) ** 2, axis=1)

    rowlen = np.ones(k_band + 1, dtype=np.int64)
    base = np.zeros(k_band + 1, dtype=np.int64)
    pos = 0
    for q in range(1, k_band + 1):
        rowlen[q] = (2 * c * q + 1) ** dims
        base[q] = pos
        pos += (n - q) * rowlen[q]
    flat = np.zeros(max(pos, 1))
    nonzero = np.zeros((k_band + 1, n), dtype=np.int8)

    spectra = None
    tables = [None]
    for q in range(1, k_band + 1):
        half = c * q
        if method != "direct":
            if spectra is None:
                spectra = np.fft.rfftn(x, axes=axes)
            full = np.fft.irfftn(spectra[q:] * np.conj(spectra[:-q]), s=spatial, axes=axes)
            picks = [np.arange(-half, half + 1) % m for m in spatial]
            if dims == 1:
                tab = full[:, picks[0]]
            else:
                tab = full[:, picks[0]][:, :, picks[1]].reshape(n - q, -1)
            # entries below the transform's round-off level are exact zeros
            floor = FFT_ZERO_FLOOR * np.sqrt(diag[q:] * diag[:-q])[:, None]
            tab = np.where(np.abs(tab) <= floor, 0.0, tab)
        else:
            lead, lag = x[q:], x[:-q]
            cols = [
                np.sum(lead * np.roll(lag, s, axis=axes), axis=axes)
                for s in _lag_grid(half, dims)
            ]
            tab = np.stack(cols, axis=1)
        view = flat[base[q]: base[q] + (n - q) * rowlen[q]].reshape(n - q, rowlen[q])
        view[...] = tab
        nonzero[q, : n - q] = np.any(view != 0, axis=1)
        tables.append(view)
    return CorrelationBand(n=n, band_width=k_band, lipschitz=c, dims=dims, tables=tables, diag=diag,
                           packed=(flat, base, rowlen, nonzero))


def tau_k(lam, band: CorrelationBand, kernel: KernelWeights, k: int | None = None) -> float:
    """Kernel-weighted sum of correlations over all pairs at most ``k`` apart.

    Includes the shift-independent diagonal terms. ``k`` defaults to the
    band width of ``band``.
    """
    k = band.band_width if k is None else int(k)
    if k > band.band_width or k > kernel.band_width:
        raise ValueError(f"k={k} exceeds the stored band (corr {band.band_width}, kernel {kernel.band_width})")
    lam = as_shifts(lam, band.n, band.dims)
    total = float(np.dot(kernel.diagonal, band.diag))
    off = 0.0
    for q in range(1, k + 1):
        lag = lam[q:] - lam[:-q]
        idx = band.lag_index(q, lag)
        vals = band.tables[q][np.arange(band.n - q), idx]
        off += float(np.dot(kernel.band[q:, q], vals))
    return total + 2.0 * off


def full_objective(u, lam, d, mu: float) -> float:
    """``||S_{-lam}(D) - U||_F^2 + mu * total_change(U)``.

    For ``mu = inf`` the penalty is zero when all columns of U agree and
    infinite otherwise.
    """
    u = np.asarray(u, dtype=np.float64)
    fidelity = float(np.sum((shift_columns(d, -np.asarray(lam)) - u) ** 2))
    tc = total_change(u)
    if mu == INF:
        return fidelity if tc <= 1e-24 * max(1.0, float(np.sum(u**2))) else INF
    return fidelity + mu * tc


def reduced_objective(lam, d, mu: float, c: int | None = None) -> float:
    """Minimum over U of :func:`full_objective` at fixed ``lam``: ``||D||^2 - tau_{N-1}``."""
    a = as_data(d)
    lam = as_shifts(lam, a.shape[-1], a.ndim - 1)
    n = a.shape[-1]
    if c is None:
        c = int(np.max(np.abs(np.diff(lam, axis=0)))) if n > 1 else 0
    band = correlate_band(a, c, n - 1)
    kernel = build_kernel(n, mu, n - 1)
    return float(np.sum(a**2)) - tau_k(lam, band, kernel)
