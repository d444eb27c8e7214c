"""Compare the numba and numpy kernels, and the two correlation routes.

    python3 benchmarks/bench_backends.py            # graph + tridiagonal solve
    python3 benchmarks/bench_backends.py --corr     # direct vs FFT lag tables

Both backends are checked for identical results before timing.
"""
import argparse
import math

import numpy as np

from orka._accel import NUMBA_AVAILABLE
from orka.bench import random_normalized, time_call
from orka.core import build_kernel, solve_shifted_quadratic
from orka.graph import MoveSet, longest_path
from orka.objective import correlate_band


def graph_rows(cases):
    for m, n, c, k in cases:
        d = random_normalized(m, n, seed=1)
        band = correlate_band(d, c, k)
        kernel = build_kernel(n, 1.0, k)
        moves = MoveSet(1, c)
        res = {b: longest_path(band, kernel, moves, k, backend=b) for b in ("numba", "numpy")}
        assert np.array_equal(res["numba"].lam, res["numpy"].lam)
        assert res["numba"].weight == res["numpy"].weight
        t = {b: time_call(lambda b=b: longest_path(band, kernel, moves, k, backend=b), repeats=3, min_time=0.1)
             for b in res}
        yield f"graph  M={m:<4} N={n:<4} C={c} K={k:<2}", t["numba"], t["numpy"]


def solve_rows(cases):
    for m, n in cases:
        d = random_normalized(m, n, seed=2)
        lam = np.zeros(n, dtype=np.int64)
        a = solve_shifted_quadratic(d, lam, 3.0, backend="numba")
        b = solve_shifted_quadratic(d, lam, 3.0, backend="numpy")
        assert np.array_equal(a, b)
        t = {be: time_call(lambda be=be: solve_shifted_quadratic(d, lam, 3.0, backend=be), repeats=3, min_time=0.1)
             for be in ("numba", "numpy")}
        yield f"solve  M={m:<4} N={n:<4}", t["numba"], t["numpy"]


def corr_rows():
    # lags per table grow as 2 C q + 1; the crossover is reported per log2(M)
    for m in (64, 256, 1024):
        d = random_normalized(m, 32, seed=3)
        for c in (1, 2, 4, 8):
            k = 4
            direct = correlate_band(d, c, k, method="direct")
            fft = correlate_band(d, c, k, method="fft")
            for q in range(1, k + 1):
                assert np.allclose(direct.tables[q], fft.tables[q], atol=1e-12)
            td = time_call(lambda: correlate_band(d, c, k, method="direct"), repeats=3, min_time=0.1)
            tf = time_call(lambda: correlate_band(d, c, k, method="fft"), repeats=3, min_time=0.1)
            mean_lags = 2 * c * (k + 1) / 2 + 1
            print(f"corr   M={m:<5} C={c} K={k}  lags/log2(M)={mean_lags / math.log2(m):5.2f}  "
                  f"direct={td * 1e3:8.3f} ms  fft={tf * 1e3:8.3f} ms  {'direct' if td < tf else 'fft'}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corr", action="store_true", help="benchmark the correlation routes instead")
    args = ap.parse_args()
    if args.corr:
        corr_rows()
        return
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'case':<34}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    rows = list(graph_rows([(64, 64, 1, 3), (64, 64, 1, 6), (64, 64, 1, 9), (64, 256, 2, 4)]))
    rows += list(solve_rows([(64, 64), (1024, 256)]))
    for name, tn, tp in rows:
        print(f"{name:<34}{tn * 1e3:10.3f}ms{tp * 1e3:10.3f}ms{tp / tn:9.1f}x")


if __name__ == "__main__":
    main()
