"""Scores for comparing reconstructions with ground truth."""
from __future__ import annotations

import math
from collections import Counter

import numpy as np


def psnr(ref, est) -> float:
    """``10 log10(peak^2 * size / ||ref - est||^2)`` with ``peak = max |ref|``.

    Returns ``inf`` for identical inputs.
    """
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(est, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    err = float(np.sum((a - b) ** 2))
    if err == 0.0:
        return math.inf
    peak = float(np.max(np.abs(a)))
    if peak == 0.0:
        return -math.inf
    return 10.0 * math.log10(peak**2 * a.size / err)


def correlation(a, b) -> float:
    """Normalised Frobenius inner product."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def shift_agreement(lam, truth) -> float:
    """Fraction of measurements whose shift matches ``truth`` up to the most common offset."""
    lam = np.asarray(lam, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if lam.shape != truth.shape:
        raise ValueError(f"shape mismatch {lam.shape} vs {truth.shape}")
    diff = (lam - truth).reshape(lam.shape[0], -1)
    counts = Counter(map(tuple, diff))
    return counts.most_common(1)[0][1] / lam.shape[0]


def same_up_to_constant(lam, truth) -> bool:
    return shift_agreement(lam, truth) == 1.0
