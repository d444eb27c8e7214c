"""Scaling benchmarks of the graph stage and the brute-force comparison."""
from __future__ import annotations

import timeit

import numpy as np

from .core import build_kernel, normalize_columns
from .graph import MoveSet, longest_path
from .objective import correlate_band, tau_k
from .oracle import brute_force_best_lambda
from .synthetic import DEFAULT_SEED


def time_call(fn, repeats: int = 5, min_time: float = 0.05) -> float:
    """Best per-call wall-clock over ``repeats`` batches of at least ``min_time`` seconds."""
    timer = timeit.Timer(fn)
    fn()  # warm-up (JIT compilation, caches)
    number = 1
    while True:
        t = timer.timeit(number)
        if t >= min_time:
            break
        number *= max(2, int(min_time / max(t, 1e-9) * 1.2))
    best = t / number
    for _ in range(repeats - 1):
        best = min(best, timer.timeit(number) / number)
    return best


def random_normalized(m: int, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return normalize_columns(rng.standard_normal((m, n)))


def _graph_timer(d, c, k, mu, backend):
    n = d.shape[-1]
    band = correlate_band(d, c, k)
    kernel = build_kernel(n, mu, k)
    moves = MoveSet(d.ndim - 1, c)
    return lambda: longest_path(band, kernel, moves, k, backend=backend)


def bench_k(k_values, c: int = 1, m: int = 64, n: int = 64, mu: float = 1.0, seed: int = DEFAULT_SEED,
            backend=None, repeats: int = 5, min_time: float = 0.05):
    """Graph-stage seconds per call for each K; rows ``(k, seconds)``."""
    d = random_normalized(m, n, seed)
    return [(int(k), time_call(_graph_timer(d, c, int(k), mu, backend), repeats, min_time)) for k in k_values]


def bench_n(n_values, k: int = 4, c: int = 1, m: int | None = None, mu: float = 1.0, seed: int = DEFAULT_SEED,
            backend=None, repeats: int = 5, min_time: float = 0.05):
    """Graph-stage seconds per call for each N (square N x N data unless ``m`` is given)."""
    rows = []
    for n in n_values:
        d = random_normalized(m or n, int(n), seed)
        rows.append((int(n), time_call(_graph_timer(d, c, k, mu, backend), repeats, min_time)))
    return rows


def log_slope(rows) -> float:
    """Least-squares slope of log(seconds) against the parameter."""
    x = np.array([r[0] for r in rows], dtype=np.float64)
    y = np.log([r[1] for r in rows])
    return float(np.polyfit(x, y, 1)[0])


def compare_oracle(m: int = 32, n: int = 12, trials: int = 20, mus=(1.0, 1000.0), c: int = 1,
                   k_values=None, seed: int = DEFAULT_SEED):
    """Mean and max of ``tau_{N-1}(best) - tau_{N-1}(lam_K)`` per (mu, K).

    ``lam_K`` is the graph-search answer at band width K; ``best`` is the
    brute-force optimum of the untruncated objective.
    """
    if k_values is None:
        k_values = range(1, n)
    k_values = list(k_values)
    rng = np.random.default_rng(seed)
    data = [normalize_columns(rng.standard_normal((m, n))) for _ in range(trials)]
    rows = []
    for mu in mus:
        errs = np.zeros((trials, len(k_values)))
        kernel = build_kernel(n, mu, n - 1)
        for t, d in enumerate(data):
            band = correlate_band(d, c, n - 1)
            best_lam, _ = brute_force_best_lambda(d, mu, c, n - 1)
            # one evaluator for both sides, so equal paths give an exact 0
            best = tau_k(best_lam, band, kernel)
            for j, k in enumerate(k_values):
                lam = longest_path(band, kernel, MoveSet(1, c), k).lam
                errs[t, j] = best - tau_k(lam, band, kernel)
        for j, k in enumerate(k_values):
            rows.append((float(mu), int(k), float(errs[:, j].mean()), float(errs[:, j].max())))
    return rows
