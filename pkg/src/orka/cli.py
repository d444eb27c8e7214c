"""Command-line interface.

Exit codes: 0 success, 2 bad arguments, 3 node or enumeration budget
exhausted, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from ._accel import default_backend, set_workers
from .bench import bench_k, bench_n, compare_oracle, log_slope
from .core import INF, as_data
from .extract import ExtractionParams, decompose, orka_extract
from .graph import DEFAULT_NODE_BUDGET, NodeBudgetExceeded
from .metrics import psnr
from .oracle import EnumerationBudgetExceeded
from .synthetic import DEFAULT_SEED, gap_matrix, moving_square_clip, noise_sigma, pulse_scene

EXIT_OK, EXIT_ARGS, EXIT_BUDGET, EXIT_IO = 0, 2, 3, 4


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument types


def mu_value(text: str) -> float:
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return INF
    try:
        val = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid mu {text!r}") from None
    if math.isnan(val) or val < 0:
        raise argparse.ArgumentTypeError(f"mu must be in [0, inf], got {text!r}")
    return val


def mu_list(text: str) -> list:
    return [mu_value(t) for t in str(text).split(",") if t.strip()]


def float_list(text: str) -> list:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None


def int_list(text: str) -> list:
    """Comma list with optional ``a:b`` inclusive ranges, e.g. ``3:9`` or ``64,128``."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer list {text!r}") from None
    return out


def load_config(path) -> dict:
    """Plain ``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


# --------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--workers", type=int, default=None, help="cap on library threads")
    p.add_argument("--format", choices=("csv", "bin"), default=None,
                   help="output format (default: from the file extension, else bin)")


def _add_extract_flags(p, multi: bool):
    p.add_argument("input", help="matrix/tensor file, PGM image or directory of frames")
    if multi:
        p.add_argument("--mu", type=mu_list, default=[1.0],
                       help="mu per iteration, comma separated ('inf' allowed); the last value repeats")
        p.add_argument("--objects", type=int, default=1)
    else:
        p.add_argument("--mu", type=mu_value, default=1.0, help="regularisation, float or 'inf'")
    p.add_argument("--c", type=int, default=1, help="Lipschitz constant (max shift per measurement)")
    p.add_argument("--k", type=int, default=3, help="band width K of the approximation")
    p.add_argument("--dims", type=int, choices=(1, 2), default=None,
                   help="shift dimensions (default: 1 for matrices, 2 for tensors)")
    p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    p.add_argument("--tie-break", choices=("negative", "centered"), default=None)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--out", required=True)
    _add_common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orka", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices  # name -> subparser, used for config defaults

    p = sub.add_parser("gen-gap", help="write the gap-diagonal test matrix")
    p.add_argument("--out", required=True)
    p.add_argument("--max-gap", type=int, default=14)
    _add_common(p)

    p = sub.add_parser("gen-scene", help="synthetic pulses (dims 1) or moving square clip (dims 2)")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=int, choices=(1, 2), default=1)
    p.add_argument("--m", type=int, default=96, help="samples per measurement (side length for dims 2)")
    p.add_argument("--n", type=int, default=32, help="number of measurements")
    p.add_argument("--velocity", type=float_list, default=[1.0],
                   help="dims 1: one velocity per pulse; dims 2: row,col velocity of the square")
    p.add_argument("--amplitude", type=float_list, default=None)
    p.add_argument("--width", type=float, default=8.0)
    p.add_argument("--period", type=float, default=None, help="carrier period (plain Gaussian if omitted)")
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--noise-psnr", type=float, default=None, help="target input PSNR in dB")
    p.add_argument("--size", type=int, default=6, help="square side (dims 2)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_common(p)

    _add_extract_flags(sub.add_parser("extract", help="extract one object"), multi=False)
    _add_extract_flags(sub.add_parser("decompose", help="peel off several objects"), multi=True)
    _add_extract_flags(sub.add_parser("denoise", help="sum of the extracted objects"), multi=True)

    p = sub.add_parser("psnr", help="PSNR of B against reference A")
    p.add_argument("reference")
    p.add_argument("estimate")
    _add_common(p)

    p = sub.add_parser("bench-k", help="graph-stage time against K")
    p.add_argument("--k-values", type=int_list, default=list(range(3, 10)))
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--mu", type=mu_value, default=1.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("bench-n", help="graph-stage time against N")
    p.add_argument("--n-values", type=int_list, default=[64, 128, 256, 512])
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--mu", type=mu_value, default=1.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("compare-oracle", help="mean error of each K against brute force")
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--mus", type=mu_list, default=[1.0, 1000.0])
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--k-values", type=int_list, default=None)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    _add_common(p)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        sub = parser.commands[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # string defaults go through each option's type conversion
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# --------------------------------------------------------------------------
# commands


def _ext(args) -> str:
    return "csv" if args.format == "csv" else "bin"


def _write_csv(path, header, rows) -> None:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    io.atomic_write(path, buf.getvalue().encode())


def _params(args, mu, dims) -> ExtractionParams:
    return ExtractionParams(mu=mu, lipschitz=args.c, k_band=args.k, dims=dims, node_budget=args.node_budget,
                            tie_break=args.tie_break, backend=args.backend)


def _load_input(args):
    data = as_data(io.read_array(args.input))
    dims = data.ndim - 1
    if args.dims is not None and args.dims != dims:
        raise UsageError(f"--dims {args.dims} does not match input with shape {data.shape}")
    return data, dims


def _report_params(args, extra=None) -> dict:
    rep = {"command": args.command}
    for key, val in sorted(vars(args).items()):
        if key in ("command",):
            continue
        rep[f"param.{key}"] = val
    rep["backend"] = args.backend or default_backend()
    if extra:
        rep.update(extra)
    return rep


def _object_report(prefix, obj) -> dict:
    lam = np.asarray(obj.lam)
    rep = {f"{prefix}objective": repr(obj.objective)}
    if lam.ndim == 1:
        rep[f"{prefix}lambda"] = lam
    else:
        for d in range(lam.shape[1]):
            rep[f"{prefix}lambda_{'xy'[d] if lam.shape[1] == 2 else d}"] = lam[:, d]
    for stage, sec in obj.info.get("timings", {}).items():
        rep[f"{prefix}seconds.{stage}"] = f"{sec:.6f}"
    rep[f"{prefix}node_counts"] = obj.info.get("node_counts", [])
    return rep


def cmd_gen_gap(args):
    io.write_array(args.out, gap_matrix(args.max_gap), args.format)
    print(f"wrote {args.out}")


def _stem(path):
    p = Path(path)
    return p.with_name(p.stem)


def cmd_gen_scene(args):
    out = Path(args.out)
    ext = out.suffix or (".csv" if args.format == "csv" else ".bin")
    stem = _stem(out)
    if args.dims == 1:
        if args.velocity and max(abs(v) for v in args.velocity) > args.m:
            raise UsageError("velocity larger than the measurement length")
        sc = pulse_scene(args.m, args.n, velocities=args.velocity, width=args.width, amplitudes=args.amplitude,
                         drift=args.drift, period=args.period, noise_psnr=args.noise_psnr, seed=args.seed)
        truth = sc.paths.T  # one column per object
    else:
        if len(args.velocity) != 2 or any(v != int(v) for v in args.velocity):
            raise UsageError("dims 2 needs an integer velocity pair, e.g. --velocity 1,2")
        sc = moving_square_clip(args.m, args.m, args.n, velocity=[int(v) for v in args.velocity],
                                size=args.size, seed=args.seed)
        truth = sc.paths[1]
        if args.noise_psnr is not None:
            rng = np.random.default_rng(args.seed + 1)
            sc.noisy = sc.clean + noise_sigma(sc.clean, args.noise_psnr) * rng.standard_normal(sc.clean.shape)
    fmt = args.format or ("csv" if ext == ".csv" else "bin")
    io.write_array(out, sc.noisy, fmt)
    io.write_array(f"{stem}_clean{ext}", sc.clean, fmt)
    io.write_shifts(f"{stem}_truth.csv", truth)
    print(f"wrote {out}, {stem}_clean{ext}, {stem}_truth.csv")


def cmd_extract(args):
    data, dims = _load_input(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    obj = orka_extract(data, _params(args, args.mu, dims))
    residual = data - obj.assemble()
    ext = _ext(args)
    io.write_array(out / f"u.{ext}", obj.u, args.format or "bin")
    io.write_shifts(out / "lambda.csv", obj.lam)
    io.write_array(out / f"residual.{ext}", residual, args.format or "bin")
    rep = _report_params(args, _object_report("", obj))
    rep["residual_norms"] = [float(np.linalg.norm(data)), float(np.linalg.norm(residual))]
    io.atomic_write(out / "report.txt", io.format_report(rep).encode())
    print(io.format_report(rep), end="")


def cmd_decompose(args):
    data, dims = _load_input(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = [_params(args, mu, dims) for mu in args.mu]
    dec = decompose(data, args.objects, params)
    ext = _ext(args)
    rep = _report_params(args)
    for l, obj in enumerate(dec.objects, 1):
        io.write_array(out / f"object_{l}_u.{ext}", obj.u, args.format or "bin")
        io.write_shifts(out / f"object_{l}_lambda.csv", obj.lam)
        rep.update(_object_report(f"object_{l}.", obj))
    io.write_array(out / f"residual.{ext}", dec.residual, args.format or "bin")
    rep["residual_norms"] = dec.residual_norms
    io.atomic_write(out / "report.txt", io.format_report(rep).encode())
    print(io.format_report(rep), end="")


def cmd_denoise(args):
    data, dims = _load_input(args)
    params = [_params(args, mu, dims) for mu in args.mu]
    if args.objects < 0:
        raise UsageError("--objects must be non-negative")
    t0 = time.perf_counter()
    if args.objects == 0:
        den, norms, objs = np.zeros_like(data), [float(np.linalg.norm(data))], []
    else:
        dec = decompose(data, args.objects, params)
        den, norms, objs = dec.denoised(), dec.residual_norms, dec.objects
    io.write_array(args.out, den, args.format)
    rep = _report_params(args, {"seconds.total": f"{time.perf_counter() - t0:.6f}"})
    for l, obj in enumerate(objs, 1):
        rep.update(_object_report(f"object_{l}.", obj))
    rep["residual_norms"] = norms
    io.atomic_write(f"{args.out}.report.txt", io.format_report(rep).encode())
    print(io.format_report(rep), end="")


def cmd_psnr(args):
    a = io.read_array(args.reference)
    b = io.read_array(args.estimate)
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch {a.shape} vs {b.shape}")
    print(f"{psnr(a, b):.6f}")


def cmd_bench_k(args):
    rows = bench_k(args.k_values, c=args.c, m=args.m, n=args.n, mu=args.mu, seed=args.seed, backend=args.backend)
    _write_csv(args.out, ["k", "seconds"], rows)
    for k, sec in rows:
        print(f"k={k} seconds={sec:.6g}")
    if len(rows) > 1:
        print(f"log_slope={log_slope(rows):.4f} reference={math.log(2 * args.c + 1):.4f}")


def cmd_bench_n(args):
    rows = bench_n(args.n_values, k=args.k, c=args.c, mu=args.mu, seed=args.seed, backend=args.backend)
    _write_csv(args.out, ["n", "seconds"], rows)
    for n, sec in rows:
        print(f"n={n} seconds={sec:.6g}")


def cmd_compare_oracle(args):
    rows = compare_oracle(m=args.m, n=args.n, trials=args.trials, mus=args.mus, c=args.c,
                          k_values=args.k_values, seed=args.seed)
    _write_csv(args.out, ["mu", "k", "mean_error", "max_error"], rows)
    for mu, k, mean, mx in rows:
        print(f"mu={mu:g} k={k} mean_error={mean:.6g} max_error={mx:.6g}")


COMMANDS = {
    "gen-gap": cmd_gen_gap,
    "gen-scene": cmd_gen_scene,
    "extract": cmd_extract,
    "decompose": cmd_decompose,
    "denoise": cmd_denoise,
    "psnr": cmd_psnr,
    "bench-k": cmd_bench_k,
    "bench-n": cmd_bench_n,
    "compare-oracle": cmd_compare_oracle,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"orka: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"orka: error: {exc}", file=sys.stderr)
        return EXIT_IO
    set_workers(args.workers)
    try:
        COMMANDS[args.command](args)
    except (NodeBudgetExceeded, EnumerationBudgetExceeded) as exc:
        count = getattr(exc, "nodes", getattr(exc, "count", None))
        print(f"orka: budget exhausted: {exc} (count={count})", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, io.FormatError) as exc:
        print(f"orka: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"orka: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
