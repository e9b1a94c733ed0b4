"""Point-set files.

Text: a header line ``n d`` followed by n lines of d non-negative decimal
integers. Binary: magic ``CHPT``, version byte 1, little-endian u32 n, u32 d,
u64 alpha, then n*d little-endian u64 coordinates in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import MAX_COORD, PointSet, UsageError, is_pow2

MAGIC = b"CHPT"
VERSION = 1
_HEADER = struct.Struct("<IIQ")
HEADER_SIZE = len(MAGIC) + 1 + _HEADER.size


class ParseError(UsageError):
    """A point-set file that does not follow the format; the message names the line or byte offset."""


def _parse_int(tok: str, where: str) -> int:
    if not tok.isdigit():
        raise ParseError(f"{where}: expected a non-negative integer, got {tok!r}")
    return int(tok)


def parse_text(data: bytes) -> PointSet:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"byte {exc.start}: text files must be ASCII") from None
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError("line 1: empty file, expected header 'n d'")
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError(f"line 1: expected header 'n d', got {lines[0]!r}")
    n, d = (_parse_int(tok, "line 1") for tok in head)
    if n < 1 or d < 1:
        raise ParseError(f"line 1: need n >= 1 and d >= 1, got n={n} d={d}")
    if len(lines) - 1 != n:
        raise ParseError(f"line {len(lines) + 1}: header announces {n} points, found {len(lines) - 1}")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if len(toks) != d:
            raise ParseError(f"line {ln}: expected {d} coordinates, got {len(toks)}")
        row = [_parse_int(tok, f"line {ln}") for tok in toks]
        if max(row) > MAX_COORD:
            raise ParseError(f"line {ln}: coordinate exceeds 2**63 - 1")
        rows.append(row)
    return PointSet(np.array(rows, dtype=np.int64))


def parse_binary(data: bytes) -> PointSet:
    if len(data) < HEADER_SIZE:
        raise ParseError(f"byte {len(data)}: truncated header, need {HEADER_SIZE} bytes")
    if data[:4] != MAGIC:
        raise ParseError("byte 0: bad magic, expected b'CHPT'")
    if data[4] != VERSION:
        raise ParseError(f"byte 4: unsupported version {data[4]}")
    n, d, alpha = _HEADER.unpack_from(data, 5)
    if n < 1 or d < 1:
        raise ParseError(f"byte 5: need n >= 1 and d >= 1, got n={n} d={d}")
    if not is_pow2(alpha) or alpha < 2:
        raise ParseError(f"byte 13: alpha must be a power of two >= 2, got {alpha}")
    expected = HEADER_SIZE + 8 * n * d
    if len(data) != expected:
        raise ParseError(f"byte {min(len(data), expected)}: expected {expected} bytes for n={n} d={d}, got {len(data)}")
    coords = np.frombuffer(data, dtype="<u8", offset=HEADER_SIZE).reshape(n, d)
    bad = np.flatnonzero(coords.ravel() >= np.uint64(min(alpha, MAX_COORD + 1)))
    if bad.size:
        raise ParseError(f"byte {HEADER_SIZE + 8 * int(bad[0])}: coordinate {int(coords.ravel()[bad[0]])} "
                         f"is not below alpha={alpha} and 2**63")
    return PointSet(coords.astype(np.int64), alpha)


def load_pointset(path) -> PointSet:
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return parse_binary(data)
    return parse_text(data)


def format_text(P: PointSet) -> bytes:
    lines = [f"{P.n} {P.d}"]
    lines.extend(" ".join(map(str, row)) for row in P.coords.tolist())
    return ("\n".join(lines) + "\n").encode("ascii")


def format_binary(P: PointSet) -> bytes:
    head = MAGIC + bytes([VERSION]) + _HEADER.pack(P.n, P.d, P.alpha)
    return head + P.coords.astype("<u8").tobytes()


def write_pointset(P: PointSet, path, fmt: str = "text") -> None:
    if fmt == "text":
        data = format_text(P)
    elif fmt == "binary":
        data = format_binary(P)
    else:
        raise UsageError(f"unknown format {fmt!r}")
    Path(path).write_bytes(data)
