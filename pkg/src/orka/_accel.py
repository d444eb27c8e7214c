"""Numba availability and backend selection.

Hot kernels are written twice: a numba ``@njit`` loop version and a
vectorised numpy version. ``ORKA_DISABLE_NUMBA=1`` (or a missing numba)
routes every call to the numpy path. Individual calls can still ask for a
backend explicitly, which is what the benchmarks and cross-check tests do.
"""
from __future__ import annotations

import os
import warnings

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False

NUMBA_DISABLED = os.environ.get("ORKA_DISABLE_NUMBA", "").strip().lower() not in _FALSY

BACKENDS = ("numba", "numpy")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]) and len(args) == 1 and not kwargs:
        return args[0]
    return lambda func: func


def default_backend() -> str:
    if NUMBA_AVAILABLE and not NUMBA_DISABLED:
        return "numba"
    return "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def set_workers(n: int | None) -> None:
    """Cap the numba thread pool. No-op without numba."""
    if n is None or not NUMBA_AVAILABLE:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    with warnings.catch_warnings():
        # threading-layer probing warns about an old TBB even though we fall back cleanly
        warnings.simplefilter("ignore", numba.NumbaWarning)
        numba.set_num_threads(n)
