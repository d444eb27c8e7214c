"""Matrix/tensor files: CSV, a small binary format, PGM frames.

Binary layout: ``b"ORKA"``, version byte ``1``, uint64 LE ``ndims``, uint64
LE each dim, then float64 LE values in row-major order.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"ORKA"
VERSION = 1
MAX_NDIMS = 8


class FormatError(ValueError):
    """Malformed or unsupported file contents."""


def atomic_write(path, data: bytes) -> None:
    """Write ``data`` to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_binary(a) -> bytes:
    a = np.ascontiguousarray(a, dtype="<f8")
    head = MAGIC + bytes([VERSION]) + struct.pack("<Q", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes(order="C")


def decode_binary(buf: bytes) -> np.ndarray:
    if len(buf) < 13 or buf[:4] != MAGIC:
        raise FormatError("not an ORKA binary file")
    if buf[4] != VERSION:
        raise FormatError(f"unsupported format version {buf[4]}")
    (ndims,) = struct.unpack_from("<Q", buf, 5)
    if not 1 <= ndims <= MAX_NDIMS:
        raise FormatError(f"implausible number of dims {ndims}")
    off = 13 + 8 * ndims
    if len(buf) < off:
        raise FormatError("truncated header")
    dims = struct.unpack_from(f"<{ndims}Q", buf, 13)
    count = 1
    for d in dims:
        count *= d
    # check the payload length before allocating anything of that size
    if len(buf) - off != 8 * count:
        raise FormatError(f"payload has {len(buf) - off} bytes, header {dims} needs {8 * count}")
    return np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(dims).astype(np.float64)


def _format_of(path, fmt):
    if fmt is not None:
        return fmt
    return "csv" if str(path).lower().endswith((".csv", ".txt")) else "bin"


def write_array(path, a, fmt: str | None = None) -> None:
    """Write a 2-D array as CSV (17 significant digits) or any array as binary."""
    a = np.asarray(a, dtype=np.float64)
    fmt = _format_of(path, fmt)
    if fmt == "csv":
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise ValueError("CSV holds 2-D arrays only; use the binary format for tensors")
        lines = [",".join(format(v, ".17g") for v in row) for row in a]
        atomic_write(path, ("\n".join(lines) + "\n").encode())
    elif fmt == "bin":
        atomic_write(path, encode_binary(a))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_array(path, fmt: str | None = None) -> np.ndarray:
    """Read a CSV/binary file, a PGM image, or a directory of frames."""
    path = Path(path)
    if path.is_dir():
        return read_frames(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    fmt = _format_of(path, fmt)
    data = path.read_bytes()
    if fmt == "bin" or data[:4] == MAGIC:
        return decode_binary(data)
    try:
        rows = [[float(x) for x in line.split(",")] for line in data.decode().splitlines() if line.strip()]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: ragged or empty CSV")
    return np.array(rows, dtype=np.float64)


def read_pgm(path) -> np.ndarray:
    """Binary PGM (P5, maxval <= 255) mapped to [0, 1]."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: only binary PGM (P5) is supported")
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval <= 255:
        raise FormatError(f"{path}: maxval {maxval} not supported")
    pos += 1  # single whitespace after maxval
    if len(data) - pos < width * height:
        raise FormatError(f"{path}: truncated PGM pixel data")
    img = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return img.reshape(height, width).astype(np.float64) / maxval


def read_frames(directory) -> np.ndarray:
    """Stack the 2-D frames of a directory (sorted by name) along a last axis."""
    files = sorted(p for p in Path(directory).iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise FormatError(f"{directory}: no frame files")
    frames = [read_array(f) for f in files]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1 or frames[0].ndim != 2:
        raise FormatError(f"{directory}: frames must be 2-D and equally sized, got {shapes}")
    return np.stack(frames, axis=-1)


def write_shifts(path, lam) -> None:
    """Shift vector as CSV, one row per measurement."""
    lam = np.asarray(lam, dtype=np.int64)
    if lam.ndim == 1:
        lam = lam[:, None]
    atomic_write(path, ("\n".join(",".join(str(int(v)) for v in row) for row in lam) + "\n").encode())


def read_shifts(path) -> np.ndarray:
    rows = [[int(x) for x in line.split(",")] for line in Path(path).read_text().splitlines() if line.strip()]
    lam = np.array(rows, dtype=np.int64)
    return lam[:, 0] if lam.shape[1] == 1 else lam


def format_report(items: dict) -> str:
    """``key: value`` lines; sequences are comma separated."""
    out = []
    for key, val in items.items():
        if isinstance(val, (list, tuple, np.ndarray)):
            val = ",".join(str(v) for v in np.asarray(val).ravel().tolist())
        out.append(f"{key}: {val}")
    return "\n".join(out) + "\n"


def parse_report(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        if ":" in line:
            key, val = line.split(":", 1)
            out[key.strip()] = val.strip()
    return out
