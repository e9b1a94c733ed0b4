import struct

import numpy as np
import pytest

from fastchamfer.core import PointSet
from fastchamfer.formats import ParseError, format_binary, load_pointset, write_pointset


def write(tmp_path, data, name="p.txt"):
    path = tmp_path / name
    path.write_bytes(data)
    return path


def test_text_minimal(tmp_path):
    P = load_pointset(write(tmp_path, b"1 2\n3 4\n"))
    assert (P.n, P.d) == (1, 2)
    assert P.coords.tolist() == [[3, 4]]
    assert P.alpha == 8


@pytest.mark.parametrize("data,where", [
    (b"", "line 1"),
    (b"2\n1 2\n", "line 1"),
    (b"2 2\n1 2\n", "line 3"),
    (b"1 2\n1 2 3\n", "line 2"),
    (b"1 2\n1 x\n", "line 2"),
    (b"1 2\n1 -4\n", "line 2"),
    (b"1 1\n9223372036854775808\n", "line 2"),
])
def test_text_errors_name_line(tmp_path, data, where):
    with pytest.raises(ParseError, match=where):
        load_pointset(write(tmp_path, data))


def test_binary_layout_is_exact(tmp_path):
    P = PointSet([[1, 2], [3, 4], [5, 6]], alpha=8)
    data = format_binary(P)
    assert data[:5] == b"CHPT\x01"
    assert struct.unpack_from("<IIQ", data, 5) == (3, 2, 8)
    assert struct.unpack_from("<6Q", data, 21) == (1, 2, 3, 4, 5, 6)
    assert len(data) == 21 + 48


@pytest.mark.parametrize("mutate,where", [
    (lambda b: b[:10], "byte 10"),
    (lambda b: b[:4] + b"\x02" + b[5:], "byte 4"),
    (lambda b: b[:-3], "byte"),
    (lambda b: b[:21] + struct.pack("<Q", 9) + b[29:], "byte 21"),
    (lambda b: b[:13] + struct.pack("<Q", 6) + b[21:], "byte 13"),
])
def test_binary_errors_name_offset(tmp_path, mutate, where):
    data = format_binary(PointSet([[1, 2], [3, 4]], alpha=8))
    with pytest.raises(ParseError, match=where):
        load_pointset(write(tmp_path, mutate(data), "p.bin"))


@pytest.mark.parametrize("fmt", ["text", "binary"])
def test_round_trip(tmp_path, fmt):
    gen = np.random.default_rng(0)
    P = PointSet(gen.integers(0, 2**40, size=(50, 7)))
    write_pointset(P, tmp_path / "p", fmt)
    assert load_pointset(tmp_path / "p") == P


def test_text_and_binary_agree(tmp_path):
    P = PointSet(np.random.default_rng(1).integers(0, 1000, size=(20, 4)))
    write_pointset(P, tmp_path / "a.txt", "text")
    write_pointset(P, tmp_path / "a.bin", "binary")
    assert load_pointset(tmp_path / "a.txt") == load_pointset(tmp_path / "a.bin")
