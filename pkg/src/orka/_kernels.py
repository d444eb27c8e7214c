"""Hot numeric kernels, each with a numba and a numpy implementation.

Both implementations of a kernel perform the same floating point operations
in the same order, so they agree bit-for-bit (including tie-breaks in the
longest-path relaxation). Callers go through :func:`thomas_solve` and
:func:`dp_forward`, which dispatch on the backend name.

Graph node encoding used by ``dp_forward``: a node at column ``i`` stores the
last ``h = min(i, K-1)`` moves as base-``B`` digits, digit 0 being the most
recent move. An edge into column ``i`` carries ``L = min(i, K)`` digits;
dropping its oldest digit gives the destination node, dropping its newest
digit (``e // B``) gives the source node.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, resolve_backend


# --------------------------------------------------------------------------
# symmetric tridiagonal solve, one system matrix shared by many right sides


def _thomas_numpy(diag, off, rhs):
    n = diag.shape[0]
    x = np.array(rhs, dtype=np.float64, copy=True)
    if n == 1:
        x[:, 0] /= diag[0]
        return x
    cp = np.empty(n - 1)
    denom = np.empty(n)
    denom[0] = diag[0]
    cp[0] = off[0] / denom[0]
    for i in range(1, n):
        denom[i] = diag[i] - off[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = off[i] / denom[i]
    x[:, 0] = x[:, 0] / denom[0]
    for i in range(1, n):
        x[:, i] = (x[:, i] - off[i - 1] * x[:, i - 1]) / denom[i]
    for i in range(n - 2, -1, -1):
        x[:, i] = x[:, i] - cp[i] * x[:, i + 1]
    return x


@njit(cache=True)
def _thomas_numba(diag, off, rhs):
    n = diag.shape[0]
    rows = rhs.shape[0]
    x = rhs.copy()
    if n == 1:
        for r in range(rows):
            x[r, 0] = x[r, 0] / diag[0]
        return x
    cp = np.empty(n - 1)
    denom = np.empty(n)
    denom[0] = diag[0]
    cp[0] = off[0] / denom[0]
    for i in range(1, n):
        denom[i] = diag[i] - off[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = off[i] / denom[i]
    for r in range(rows):
        x[r, 0] = x[r, 0] / denom[0]
        for i in range(1, n):
            x[r, i] = (x[r, i] - off[i - 1] * x[r, i - 1]) / denom[i]
        for i in range(n - 2, -1, -1):
            x[r, i] = x[r, i] - cp[i] * x[r, i + 1]
    return x


def thomas_solve(diag, off, rhs, backend=None):
    """Solve ``A x_r = rhs_r`` for every row ``r`` with ``A`` symmetric tridiagonal.

    ``diag`` has length n, ``off`` length n-1, ``rhs`` shape (rows, n).
    Plain two-sweep elimination without pivoting; ``A`` must be positive
    definite.
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off = np.ascontiguousarray(off, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    if off.shape[0] == 0:
        off = np.zeros(1)
    if resolve_backend(backend) == "numba":
        return _thomas_numba(diag, off, rhs)
    return _thomas_numpy(diag, off, rhs)


# --------------------------------------------------------------------------
# longest path over the (K, C) approximation graph


def bp_dtype(n_moves: int):
    if n_moves <= np.iinfo(np.uint8).max + 1:
        return np.uint8
    if n_moves <= np.iinfo(np.uint16).max + 1:
        return np.uint16
    return np.uint32


@njit(cache=True)
def _flat_lag(cum, row, dims, q, cshift):
    win = 2 * cshift * q + 1
    idx = 0
    for d in range(dims):
        idx = idx * win + cum[row, d] + cshift * q
    return idx


@njit(cache=True)
def _lag_tables_numba(steps, k, cshift):
    n_moves, dims = steps.shape
    cap = 1
    total = 0
    for q in range(1, k):
        cap *= n_moves
        total += cap
    lag_levels = np.zeros(max(total, 1), dtype=np.int64)
    lev_base = np.zeros(k + 1, dtype=np.int64)
    cum = np.zeros((cap, dims), dtype=np.int64)
    size = 1
    pos = 0
    for q in range(1, k):
        lev_base[q] = pos
        # p = src + size * m, descending so cum[src] is read before overwritten
        for m in range(n_moves - 1, -1, -1):
            for src in range(size - 1, -1, -1):
                p = src + size * m
                for d in range(dims):
                    cum[p, d] = cum[src, d] + steps[m, d]
        size *= n_moves
        for p in range(size):
            lag_levels[pos + p] = _flat_lag(cum, p, dims, q, cshift)
        pos += size
    last_base = np.empty(size, dtype=np.int64)
    for p in range(size):
        last_base[p] = _flat_lag(cum, p, dims, k, cshift)
    win = 2 * cshift * k + 1
    step_off = np.zeros(n_moves, dtype=np.int64)
    for m in range(n_moves):
        for d in range(dims):
            step_off[m] = step_off[m] * win + steps[m, d]
    return lag_levels, lev_base, last_base, step_off


@njit(cache=True)
def _dp_forward_numba(n_cols, k, n_moves, corr, base, rowlen, nonzero, lag_levels, lev_base,
                      last_base, step_off, wband, bp):
    cap = 1
    for _ in range(k - 1):
        cap *= n_moves
    p_arr = np.zeros(cap)
    v_prev = np.zeros(cap)
    v_new = np.empty(cap)
    for i in range(1, n_cols):
        full = i >= k
        ell = k if full else i
        levels = ell - 1 if full else ell
        size = 1
        p_arr[0] = 0.0
        for q in range(1, levels + 1):
            w = wband[i, q]
            row0 = base[q] + (i - q) * rowlen[q]
            lb = lev_base[q]
            # descending p = src + size * m keeps the in-place update safe
            if nonzero[q, i - q] != 0:
                for m in range(n_moves - 1, -1, -1):
                    for src in range(size - 1, -1, -1):
                        p = src + size * m
                        p_arr[p] = p_arr[src] + w * corr[row0 + lag_levels[lb + p]]
            else:
                for m in range(n_moves - 1, 0, -1):
                    for src in range(size):
                        p_arr[src + size * m] = p_arr[src]
            size *= n_moves
        if full:
            w = wband[i, k]
            row0 = base[k] + (i - k) * rowlen[k]
            stride = size // n_moves  # size == B**(K-1); K == 1 gives stride 0
            if nonzero[k, i - k] != 0:
                for node in range(size):
                    hi = node // n_moves if stride > 0 else 0
                    r0 = row0 + last_base[node]
                    best = -np.inf
                    arg = 0
                    for m in range(n_moves):
                        cand = v_prev[hi + stride * m] + w * corr[r0 + step_off[m]]
                        if cand > best:
                            best = cand
                            arg = m
                    v_new[node] = p_arr[node] + best
                    bp[i, node] = arg
            else:
                n_hi = stride if stride > 0 else 1
                lo_end = n_moves if stride > 0 else 1
                for hi in range(n_hi):
                    best = -np.inf
                    arg = 0
                    for m in range(n_moves):
                        cand = v_prev[hi + stride * m]
                        if cand > best:
                            best = cand
                            arg = m
                    for lo in range(lo_end):
                        node = lo + n_moves * hi
                        v_new[node] = p_arr[node] + best
                        bp[i, node] = arg
        else:
            for e in range(size):
                v_new[e] = v_prev[e // n_moves] + p_arr[e]
        v_prev, v_new = v_new, v_prev
    last = 1
    for _ in range(min(k - 1, n_cols - 1)):
        last *= n_moves
    return v_prev[:last]


@njit(cache=True)
def _backtrack_numba(values, bp, k, n_moves):
    n_cols = bp.shape[0]
    node = 0
    for e in range(values.shape[0]):
        if values[e] > values[node]:
            node = e
    weight = values[node]
    stride = 1
    for _ in range(k - 1):
        stride *= n_moves
    digits = np.empty(max(n_cols - 1, 0), dtype=np.int64)
    for i in range(n_cols - 1, 0, -1):
        e = node + stride * np.int64(bp[i, node]) if i >= k else node
        digits[i - 1] = e % n_moves
        node = e // n_moves
    return weight, digits


@njit(cache=True)
def _longest_path_numba(n_cols, k, steps, cshift, corr, base, rowlen, nonzero, wband, bp):
    n_moves, dims = steps.shape
    lag_levels, lev_base, last_base, step_off = _lag_tables_numba(steps, k, cshift)
    values = _dp_forward_numba(n_cols, k, n_moves, corr, base, rowlen, nonzero, lag_levels,
                               lev_base, last_base, step_off, wband, bp)
    weight, digits = _backtrack_numba(values, bp, k, n_moves)
    lam = np.zeros((n_cols, dims), dtype=np.int64)
    for t in range(n_cols - 1):
        for d in range(dims):
            lam[t + 1, d] = lam[t, d] + steps[digits[t], d]
    return weight, digits, lam


def lag_tables(steps, k, cshift):
    """Column-independent lag-window indices of every move history.

    Returns ``levels`` (``levels[q][p]`` for q < K: window index at offset q
    of the sum of the q moves encoded by p), ``last_base`` (window index at
    offset K of the K-1 moves of each full node) and ``step_off`` (index
    increment at offset K contributed by each oldest move).
    """
    n_moves, dims = steps.shape
    cum = np.zeros((dims, 1), dtype=np.int64)
    levels = [None]

    def flat(c, q):
        win = 2 * cshift * q + 1
        idx = np.zeros(c.shape[1], dtype=np.int64)
        for d in range(dims):
            idx = idx * win + (c[d] + cshift * q)
        return idx

    for q in range(1, k):
        # p = src + size * m  ->  layout (m, src) in C order
        cum = (cum[:, None, :] + steps.T[:, :, None]).reshape(dims, -1)
        levels.append(flat(cum, q))
    last_base = flat(cum, k)
    win = 2 * cshift * k + 1
    step_off = np.zeros(n_moves, dtype=np.int64)
    for d in range(dims):
        step_off = step_off * win + steps[:, d]
    return levels, last_base, step_off


def _dp_forward_numpy(n_cols, k, n_moves, tables, lags, wband, bp):
    levels, last_base, step_off = lags
    last_idx = (step_off[:, None] + last_base[None, :]).ravel()
    v_prev = np.zeros(1)
    for i in range(1, n_cols):
        full = i >= k
        ell = k if full else i
        n_lev = ell - 1 if full else ell
        p_arr = np.zeros(1)
        for q in range(1, n_lev + 1):
            p_arr = np.tile(p_arr, n_moves) + wband[i, q] * tables[q][i - q][levels[q]]
        if full:
            size = p_arr.shape[0]
            term = wband[i, k] * tables[k][i - k][last_idx]
            cand = v_prev[np.arange(size * n_moves) // n_moves] + term
            cand = cand.reshape(n_moves, size)
            arg = np.argmax(cand, axis=0)
            bp[i, :size] = arg
            v_prev = p_arr + cand[arg, np.arange(size)]
        else:
            v_prev = v_prev[np.arange(p_arr.shape[0]) // n_moves] + p_arr
    return v_prev


def _backtrack_numpy(values, bp, k, n_moves):
    n_cols = bp.shape[0]
    node = int(np.argmax(values))
    weight = float(values[node])
    stride = n_moves ** (k - 1)
    digits = np.empty(max(n_cols - 1, 0), dtype=np.int64)
    for i in range(n_cols - 1, 0, -1):
        e = node + stride * int(bp[i, node]) if i >= k else node
        digits[i - 1] = e % n_moves
        node = e // n_moves
    return weight, digits


def best_path(n_cols, k, steps, packed, cshift, wband, backend=None):
    """Forward max-plus sweep over all graph partitions, then backtrack.

    Parameters
    ----------
    n_cols : int
        Number of measurements N (graph partitions), at least 2.
    k : int
        Band width K >= 1.
    steps : ndarray of int, shape (B, dims)
        Lambda increment of each move, in tie-break preference order.
    packed : tuple
        ``(corr, base, rowlen, nonzero)``: all correlation tables in one flat
        buffer, ``corr[base[q] + k * rowlen[q] + idx]`` being the window entry
        ``idx`` of the pair (k + q, k); ``nonzero[q, k]`` flags rows that
        are not identically zero.
    cshift : int
        Lipschitz constant C of the correlation windows.
    wband : ndarray, shape (N, >= K + 1)
        ``wband[i, q]`` is the kernel weight between columns i and i - q.

    Returns
    -------
    weight : float
        Accumulated weight of the best path.
    digits : ndarray of int, shape (N - 1,)
        Index into ``steps`` of every move along the best path.
    lam : ndarray of int, shape (N, dims)
        Shift vector of the best path, anchored at zero.
    """
    steps = np.ascontiguousarray(steps, dtype=np.int64)
    n_moves = steps.shape[0]
    bp = np.zeros((n_cols, n_moves ** (k - 1)), dtype=bp_dtype(n_moves))
    wband = np.ascontiguousarray(wband, dtype=np.float64)
    corr, base, rowlen, nonzero = packed
    if resolve_backend(backend) == "numba":
        weight, digits, lam = _longest_path_numba(n_cols, k, steps, int(cshift), corr, base, rowlen,
                                                  nonzero, wband, bp)
        return float(weight), digits, lam
    tables = [None] + [
        corr[base[q]: base[q] + (n_cols - q) * rowlen[q]].reshape(n_cols - q, rowlen[q])
        for q in range(1, k + 1)
    ]
    values = _dp_forward_numpy(n_cols, k, n_moves, tables, lag_tables(steps, k, int(cshift)), wband, bp)
    weight, digits = _backtrack_numpy(values, bp, k, n_moves)
    lam = np.concatenate([np.zeros((1, steps.shape[1]), dtype=np.int64), np.cumsum(steps[digits], axis=0)])
    return weight, digits, lam
