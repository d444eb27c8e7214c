"""Synthetic scenes with known ground truth."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import shift_columns

DEFAULT_SEED = 20240607
MAX_GAP = 14


def gap_positions(max_gap: int = MAX_GAP) -> np.ndarray:
    """Diagonal marker positions separated by 0, 1, ..., ``max_gap`` zeros."""
    gaps = np.arange(max_gap + 1)
    return np.concatenate([[0], np.cumsum(gaps + 1)])


def gap_matrix(max_gap: int = MAX_GAP) -> np.ndarray:
    """Square diagonal matrix with ones at :func:`gap_positions` (side 121 by default)."""
    pos = gap_positions(max_gap)
    diag = np.zeros(pos[-1] + 1)
    diag[pos] = 1.0
    return np.diag(diag)


def noise_sigma(clean, target_psnr: float) -> float:
    """Gaussian sigma whose expected PSNR against ``clean`` is ``target_psnr``."""
    peak = float(np.max(np.abs(clean)))
    return peak * 10.0 ** (-target_psnr / 20.0)


def rounded_path(velocity: float, n: int, offset: int = 0) -> np.ndarray:
    """Integer shift path ``round(velocity * k) + offset``."""
    return (np.floor(velocity * np.arange(n) + 0.5) + offset).astype(np.int64)


def _pulse(m: int, center: float, width: float, period: float | None = None) -> np.ndarray:
    i = np.arange(m)
    dist = (i - center + m / 2) % m - m / 2  # cyclic distance
    env = np.exp(-0.5 * (dist / width) ** 2)
    if period is None:
        return env
    return env * np.cos(2 * np.pi * dist / period)


@dataclass
class Scene:
    clean: np.ndarray
    noisy: np.ndarray
    paths: np.ndarray              # (objects, N) or (objects, N, 2)
    components: list = field(default_factory=list, repr=False)
    sigma: float = 0.0


def pulse_scene(
    m: int,
    n: int,
    velocities=(1.0,),
    centers=None,
    width: float = 3.0,
    amplitudes=None,
    drift: float = 0.0,
    period: float | None = None,
    noise_psnr: float | None = None,
    seed: int = DEFAULT_SEED,
) -> Scene:
    """Gaussian pulses travelling along rounded linear paths.

    With ``drift = 0`` each component is exactly ``S_nu(u 1^T)``. A positive
    ``drift`` modulates amplitude and width smoothly over the columns.
    ``period`` turns the pulse into a Gaussian-windowed cosine wavelet.
    """
    rng = np.random.default_rng(seed)
    velocities = list(np.atleast_1d(velocities))
    count = len(velocities)
    if centers is None:
        centers = [(j + 0.5) * m / count for j in range(count)]
    if amplitudes is None:
        amplitudes = [1.0] * count
    if drift < 0:
        raise ValueError("drift must be non-negative")
    k = np.arange(n)
    phase = 2 * np.pi * k / max(n, 1)
    amp_mod = 1.0 + drift * np.sin(phase)
    width_mod = 1.0 + 0.5 * drift * np.cos(phase)
    comps, paths = [], []
    for v, c0, a0 in zip(velocities, centers, amplitudes):
        nu = rounded_path(v, n)
        if drift == 0:
            template = a0 * _pulse(m, c0, width, period)
            comp = shift_columns(np.repeat(template[:, None], n, axis=1), nu)
        else:
            comp = np.stack(
                [a0 * amp_mod[j] * _pulse(m, c0 + nu[j], width * width_mod[j], period) for j in range(n)], axis=1
            )
        comps.append(comp)
        paths.append(nu)
    clean = np.sum(comps, axis=0)
    sigma = 0.0
    noisy = clean.copy()
    if noise_psnr is not None:
        sigma = noise_sigma(clean, noise_psnr)
        noisy = clean + sigma * rng.standard_normal(clean.shape)
    return Scene(clean=clean, noisy=noisy, paths=np.array(paths), components=comps, sigma=sigma)


def moving_square_clip(
    m1: int = 32,
    m2: int = 32,
    n: int = 10,
    velocity=(1, 2),
    size: int = 6,
    corner=(4, 4),
    background: float = 1.0,
    seed: int = DEFAULT_SEED,
) -> Scene:
    """Bright square moving with constant integer velocity over a static texture."""
    rng = np.random.default_rng(seed)
    bg = background * rng.random((m1, m2))
    square = np.zeros((m1, m2))
    square[corner[0]:corner[0] + size, corner[1]:corner[1] + size] = 1.0
    nu = np.stack([np.arange(n) * int(velocity[0]), np.arange(n) * int(velocity[1])], axis=1)
    obj = shift_columns(np.repeat(square[..., None], n, axis=2), nu)
    back = np.repeat(bg[..., None], n, axis=2)
    clean = back + obj
    paths = np.stack([np.zeros_like(nu), nu])
    return Scene(clean=clean, noisy=clean.copy(), paths=paths, components=[back, obj])
