"""Longest path through the implicit (K, C) approximation graph.

The graph is layered: partition i holds one node per history of the last
``min(i, K-1)`` relative moves. It is never materialised; the forward sweep
keeps the node values of one partition and a byte-sized backpointer per
node, then backtracks from the best node of the final partition (the
zero-weight sink edges make that argmax the answer).
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from ._kernels import best_path
from .core import KernelWeights
from .objective import CorrelationBand

DEFAULT_NODE_BUDGET = 2**28


class NodeBudgetExceeded(RuntimeError):
    def __init__(self, nodes: int, budget: int):
        self.nodes = nodes
        self.budget = budget
        super().__init__(f"graph partition needs {nodes} nodes, budget is {budget}")


@dataclass(frozen=True)
class MoveSet:
    """Allowed per-step shift increments, in tie-break preference order.

    ``order='negative'`` enumerates the most negative increment first, so
    ties between equally good paths resolve to the smallest shift.
    ``order='centered'`` enumerates 0, -1, +1, -2, +2, ... and is used for
    background passes where zero drift is the natural answer.
    """

    dims: int = 1
    lipschitz: int = 1
    order: str = "negative"

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be non-negative")
        if self.order not in ("negative", "centered"):
            raise ValueError(f"unknown move order {self.order!r}")

    def axis_steps(self) -> list[int]:
        c = self.lipschitz
        if self.order == "negative":
            return list(range(-c, c + 1))
        out = [0]
        for s in range(1, c + 1):
            out += [-s, s]
        return out

    @functools.cached_property
    def steps(self) -> np.ndarray:
        """Shift increments ``lam[t+1] - lam[t]``, shape ``(size, dims)``; read-only."""
        axis = self.axis_steps()
        out = np.array(list(itertools.product(axis, repeat=self.dims)), dtype=np.int64)
        out.setflags(write=False)
        return out

    @property
    def size(self) -> int:
        return (2 * self.lipschitz + 1) ** self.dims


@dataclass(frozen=True)
class PathResult:
    lam: np.ndarray
    weight: float
    tau: float
    node_counts: list = field(repr=False)


def node_counts(n: int, k: int, move_set: MoveSet) -> list[int]:
    """Nodes per partition: ``B ** min(i, K-1)`` for 0-based partition i."""
    b = move_set.size
    h = max(min(k, n - 1) - 1, 0)
    return [b**i for i in range(h + 1)] + [b**h] * (n - h - 1)


def recover_lambda(moves) -> np.ndarray:
    """Shift vector from relative moves ``r_t = lam[t] - lam[t+1]``, anchored at 0."""
    r = np.asarray(moves, dtype=np.int64)
    if r.ndim == 1:
        return np.concatenate([[0], -np.cumsum(r)]).astype(np.int64)
    zero = np.zeros((1, r.shape[1]), dtype=np.int64)
    return np.concatenate([zero, -np.cumsum(r, axis=0)]).astype(np.int64)


def edge_weight(j: int, history, band: CorrelationBand, kernel: KernelWeights, k: int | None = None) -> float:
    """Weight of the edge entering partition ``j`` (0-based).

    ``history`` lists relative moves ``r_{j-1}, r_{j-2}, ...`` (most recent
    first, ``r_t = lam[t] - lam[t+1]``). The edge collects the weighted
    correlations of column j with its ``min(j, K)`` predecessors.
    """
    k = band.band_width if k is None else k
    depth = min(j, k)
    hist = np.asarray(history, dtype=np.int64).reshape(-1, band.dims) if len(history) else np.zeros((0, band.dims), dtype=np.int64)
    if hist.shape[0] < depth:
        raise ValueError(f"edge into partition {j} needs {depth} moves, got {hist.shape[0]}")
    total = 0.0
    lag = np.zeros(band.dims, dtype=np.int64)
    for q in range(1, depth + 1):
        lag = lag - hist[q - 1]  # lam_j - lam_{j-q}
        lagv = lag[0] if band.dims == 1 else lag
        total += kernel.band[j, q] * float(band.tables[q][j - q, band.lag_index(q, lagv)])
    return total


def longest_path(
    band: CorrelationBand,
    kernel: KernelWeights,
    move_set: MoveSet,
    k_band: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
    backend: str | None = None,
) -> PathResult:
    """Shift vector maximising ``tau_K`` over all C-Lipschitz paths with ``lam[0] = 0``."""
    n = band.n
    if move_set.dims != band.dims:
        raise ValueError("move set and correlation band disagree on dims")
    if move_set.lipschitz > band.lipschitz:
        raise ValueError("move set exceeds the Lipschitz range of the correlation band")
    k = band.band_width if k_band is None else int(k_band)
    k = min(k, n - 1)
    if n == 1:
        lam = np.zeros((1,) if band.dims == 1 else (1, band.dims), dtype=np.int64)
        tau = float(kernel.diagonal @ band.diag)
        return PathResult(lam=lam, weight=0.0, tau=tau, node_counts=[1])
    if k < 1:
        raise ValueError("band width K must be at least 1")
    if k > band.band_width or k > kernel.band_width:
        raise ValueError(f"K={k} exceeds the stored band")
    widest = move_set.size ** (k - 1)
    if widest > node_budget:
        raise NodeBudgetExceeded(widest, node_budget)

    weight, _, lam = best_path(n, k, move_set.steps, band.packed, band.lipschitz, kernel.band, backend=backend)
    if band.dims == 1:
        lam = lam[:, 0]
    tau = float(kernel.diagonal @ band.diag) + 2.0 * weight
    return PathResult(lam=lam, weight=weight, tau=tau, node_counts=node_counts(n, k, move_set))
