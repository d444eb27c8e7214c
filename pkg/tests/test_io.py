import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from orka import io

any_float = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, array_shapes(min_dims=1, max_dims=4, max_side=5), elements=any_float))
def test_binary_roundtrip_bit_exact(a):
    out = io.decode_binary(io.encode_binary(a))
    assert out.shape == a.shape
    assert out.tobytes() == a.tobytes()


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e300, 1e300, allow_nan=False, allow_subnormal=False)))
def test_csv_roundtrip(a):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "a.csv"
        io.write_array(path, a)
        back = io.read_array(path)
    assert np.allclose(back, a, rtol=1e-15, atol=0)


def test_file_roundtrips(tmp_path):
    a = np.random.default_rng(0).standard_normal((5, 4))
    io.write_array(tmp_path / "a.csv", a)
    assert np.allclose(io.read_array(tmp_path / "a.csv"), a, rtol=1e-15, atol=0)
    t = np.random.default_rng(1).standard_normal((3, 4, 2))
    io.write_array(tmp_path / "t.bin", t)
    assert np.array_equal(io.read_array(tmp_path / "t.bin"), t)
    # content sniffing beats the extension
    io.write_array(tmp_path / "t.csv", t, fmt="bin")
    assert np.array_equal(io.read_array(tmp_path / "t.csv"), t)
    with pytest.raises(ValueError):
        io.write_array(tmp_path / "t2.csv", t)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_binary_header_layout():
    buf = io.encode_binary(np.zeros((2, 3)))
    assert buf[:4] == b"ORKA" and buf[4] == 1
    assert struct.unpack_from("<3Q", buf, 5) == (2, 2, 3)
    assert len(buf) == 4 + 1 + 24 + 48


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + bytes([2]) + b[5:],
    lambda b: b[:-8],
    lambda b: b + b"\0" * 8,
    lambda b: b[:10],
    lambda b: b[:5] + struct.pack("<Q", 0) + b[13:],
])
def test_binary_rejects_corruption(mutate):
    with pytest.raises(io.FormatError):
        io.decode_binary(mutate(io.encode_binary(np.ones((2, 3)))))


def test_huge_header_rejected_before_allocation():
    buf = b"ORKA" + bytes([1]) + struct.pack("<Q", 2) + struct.pack("<2Q", 2**31, 2**31) + b"\0" * 16
    with pytest.raises(io.FormatError, match="payload"):
        io.decode_binary(buf)


def test_csv_errors(tmp_path):
    (tmp_path / "ragged.csv").write_text("1,2\n3\n")
    (tmp_path / "text.csv").write_text("1,a\n")
    (tmp_path / "empty.csv").write_text("\n")
    for name in ("ragged.csv", "text.csv", "empty.csv"):
        with pytest.raises(io.FormatError):
            io.read_array(tmp_path / name)


def test_pgm(tmp_path):
    pix = np.array([[0, 51, 255], [102, 204, 0]], dtype=np.uint8)
    (tmp_path / "f.pgm").write_bytes(b"P5\n# comment\n3 2\n255\n" + pix.tobytes())
    assert np.allclose(io.read_array(tmp_path / "f.pgm"), pix / 255.0)
    (tmp_path / "p2.pgm").write_bytes(b"P2\n3 2\n255\n0 0 0 0 0 0\n")
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "p2.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n3 2\n255\n\0\0")
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "short.pgm")


def test_frame_directory(tmp_path):
    frames = np.random.default_rng(2).random((4, 5, 3))
    d = tmp_path / "clip"
    d.mkdir()
    for k in range(3):
        io.write_array(d / f"f{k:02d}.bin", frames[..., k])
    assert np.array_equal(io.read_array(d), frames)
    io.write_array(d / "f99.bin", np.zeros((2, 2)))
    with pytest.raises(io.FormatError):
        io.read_frames(d)
    (tmp_path / "empty").mkdir()
    with pytest.raises(io.FormatError):
        io.read_frames(tmp_path / "empty")


def test_shifts_and_report(tmp_path):
    io.write_shifts(tmp_path / "l.csv", [0, 1, -2])
    assert io.read_shifts(tmp_path / "l.csv").tolist() == [0, 1, -2]
    io.write_shifts(tmp_path / "l2.csv", np.array([[0, 0], [1, -1]]))
    assert io.read_shifts(tmp_path / "l2.csv").tolist() == [[0, 0], [1, -1]]
    text = io.format_report({"mu": 1.5, "lambda": [0, 1, 2], "command": "extract"})
    assert "lambda: 0,1,2" in text
    assert io.parse_report(text) == {"mu": "1.5", "lambda": "0,1,2", "command": "extract"}
