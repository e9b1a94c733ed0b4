"""Word-level bit matrix machinery behind the transposed quadtree keys.

Bit strings are packed most-significant-bit first into ``uint64`` words, so
string position ``i`` lives in word ``i // 64`` at bit ``63 - i % 64``.  With
this layout, shifting a string right (towards higher positions) is a numeric
right shift of the multi-word integer, and lexicographic order of the word
sequence is lexicographic order of the bits.

A bit matrix with ``I`` rows and ``J`` columns is an array of shape
``(..., I, ceil(J / 64))``: every row starts on a word boundary and a row
narrower than a word sits in the high bits of its word. Leading axes are
batch axes, so one call transforms the matrices of many points at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import UsageError, is_pow2, next_pow2

W = 64
_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def n_words(bits: int) -> int:
    return (bits + W - 1) // W


# ---------------------------------------------------------------- multiword shifts

def shift_right(x: np.ndarray, k: int) -> np.ndarray:
    """Move every bit k positions towards the end of the string (last axis = words)."""
    nw = x.shape[-1]
    q, r = divmod(int(k), W)
    out = np.zeros_like(x)
    if q >= nw:
        return out
    src = x[..., : nw - q]
    if r == 0:
        out[..., q:] = src
    else:
        out[..., q:] = src >> np.uint64(r)
        out[..., q + 1:] |= src[..., : nw - q - 1] << np.uint64(W - r)
    return out


def shift_left(x: np.ndarray, k: int) -> np.ndarray:
    """Move every bit k positions towards the start of the string."""
    nw = x.shape[-1]
    q, r = divmod(int(k), W)
    out = np.zeros_like(x)
    if q >= nw:
        return out
    src = x[..., q:]
    if r == 0:
        out[..., : nw - q] = src
    else:
        out[..., : nw - q] = src << np.uint64(r)
        out[..., : nw - q - 1] |= x[..., q + 1:] >> np.uint64(W - r)
    return out


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., L) 0/1 array into (..., ceil(L/64)) MSB-first words."""
    bits = np.asarray(bits, dtype=np.uint8)
    L = bits.shape[-1]
    pad = n_words(L) * W - L
    if pad:
        bits = np.concatenate([bits, np.zeros(bits.shape[:-1] + (pad,), np.uint8)], axis=-1)
    by = np.packbits(bits, axis=-1)
    return by.view(">u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    by = words.astype(">u8").view(np.uint8)
    return np.unpackbits(by, axis=-1)[..., :length]


@lru_cache(maxsize=None)
def _pattern_mask(length: int, period: int, keep: int) -> np.ndarray:
    """Words of a ``length``-bit string with 1 where ``position % period < keep``."""
    pos = np.arange(n_words(length) * W)
    bits = ((pos % period) < keep) & (pos < length)
    mask = pack_bits(bits)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=None)
def _valid_mask(length: int) -> np.ndarray:
    mask = pack_bits(np.arange(n_words(length) * W) < length)
    mask.setflags(write=False)
    return mask


# ---------------------------------------------------------------- bit matrices

@dataclass(frozen=True)
class BitMatrix:
    """A batch of I x J bit matrices; see the module docstring for the layout."""

    rows: np.ndarray
    n_cols: int

    @property
    def n_rows(self) -> int:
        return self.rows.shape[-2]

    @classmethod
    def from_bits(cls, bits) -> BitMatrix:
        bits = np.asarray(bits)
        return cls(pack_bits(bits), bits.shape[-1])

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.rows, self.n_cols)


def _check_shape(I: int, J: int) -> None:
    if not (is_pow2(I) and is_pow2(J)):
        raise UsageError(f"matrix dimensions must be powers of two, got {I}x{J}")
    if I > J:
        raise UsageError(f"need I <= J, got {I}x{J}")


def transpose_step(rows: np.ndarray, J: int, w: int) -> np.ndarray:
    """One level of the blockwise transpose for block width w.

    Assumes every (w/2) x (w/2) sub-block is already transposed and swaps the
    off-diagonal halves of each w x w block: row i in the top half of a block
    keeps its left halves and receives row i + w/2's left halves shifted right;
    the bottom row keeps its right halves and takes row i's right halves
    shifted left.
    """
    h = w // 2
    I = rows.shape[-2]
    lo = _pattern_mask(J, w, h)
    hi = _pattern_mask(J, w, w) & ~lo
    blocks = rows.reshape(rows.shape[:-2] + (I // w, 2, h, rows.shape[-1]))
    top = blocks[..., 0, :, :]
    bot = blocks[..., 1, :, :]
    out = np.empty_like(blocks)
    out[..., 0, :, :] = (top & lo) | shift_right(bot & lo, h)
    out[..., 1, :, :] = (bot & hi) | shift_left(top & hi, h)
    return out.reshape(rows.shape)


def transpose_blocks(M: BitMatrix, w: int) -> BitMatrix:
    """Transpose every w x w block of M in place of itself."""
    I, J = M.n_rows, M.n_cols
    _check_shape(I, J)
    if not is_pow2(w) or not 2 <= w <= I:
        raise UsageError(f"block width must be a power of two in [2, {I}], got {w}")
    rows = M.rows
    h = 1
    while h < w:
        rows = transpose_step(rows, J, 2 * h)
        h *= 2
    return BitMatrix(rows, J)


def space_blocks(rows: np.ndarray, J: int, w: int) -> np.ndarray:
    """Stretch each J-bit row to 2J bits by inserting w zero bits after every w-bit block.

    The blocks are pulled apart by halving: the second half of the row moves
    right by J/2, then the second quarter of each half by J/4, and so on.
    """
    out = np.zeros(rows.shape[:-1] + (n_words(2 * J),), dtype=np.uint64)
    out[..., : rows.shape[-1]] = rows
    g = J // 2
    while g >= w:
        out = (out | shift_right(out, g)) & _pattern_mask(2 * J, 2 * g, g)
        g //= 2
    return out


def concatenate_step(rows: np.ndarray, J: int, w: int) -> np.ndarray:
    """Space out rows (I x J -> I x 2J) and merge pairs into an I/2 x 2J matrix."""
    spaced = space_blocks(rows, J, w)
    return spaced[..., 0::2, :] | shift_right(spaced[..., 1::2, :], w)


def concatenate_rows(M: BitMatrix, w: int) -> np.ndarray:
    """Flatten M into one I*J-bit string whose u-th w-bit block is
    row (u mod I), columns [w*floor(u/I), w*floor(u/I) + w) of M.

    Returns the packed words, shape (..., ceil(I*J/64)).
    """
    I, J = M.n_rows, M.n_cols
    _check_shape(I, J)
    if not is_pow2(w) or not I <= w <= J:
        raise UsageError(f"block width must be a power of two in [{I}, {J}], got {w}")
    rows = M.rows
    while I > 1:
        rows = concatenate_step(rows, J, w)
        I, J, w = I // 2, 2 * J, 2 * w
    return rows[..., 0, :]


def pack_rows(rows: np.ndarray, J: int) -> np.ndarray:
    """Plain row-major concatenation of (..., I, ceil(J/64)) rows into one string."""
    I = rows.shape[-2]
    if J % W == 0:
        return rows.reshape(rows.shape[:-2] + (I * (J // W),))
    per = W // J
    total = n_words(I * J)
    vals = rows[..., 0]
    padded = np.zeros(vals.shape[:-1] + (total * per,), dtype=np.uint64)
    padded[..., :I] = vals
    fields = padded.reshape(vals.shape[:-1] + (total, per))
    out = np.zeros(vals.shape[:-1] + (total,), dtype=np.uint64)
    for k in range(per):
        out |= fields[..., k] >> np.uint64(k * J)
    return out


# ---------------------------------------------------------------- transposed keys

@dataclass(frozen=True)
class TransposedKey:
    """Column-major read-out of a padded d' x t' hash matrix, packed into words."""

    words: np.ndarray
    length_bits: int

    def __len__(self) -> int:
        return self.length_bits


def padded_dims(d: int, t: int) -> tuple[int, int]:
    return next_pow2(d), next_pow2(t)


def hash_matrix(hashes: np.ndarray, d_pad: int, t_pad: int) -> BitMatrix:
    """Rows = coordinates, each written as a t'-bit string; zero rows prepended up to d'."""
    hashes = np.asarray(hashes, dtype=np.uint64)
    d = hashes.shape[-1]
    rows = np.zeros(hashes.shape[:-1] + (d_pad, 1), dtype=np.uint64)
    rows[..., d_pad - d:, 0] = hashes << np.uint64(W - t_pad)
    return BitMatrix(rows, t_pad)


def encode_key(hashes, t: int) -> TransposedKey:
    """Transposed key h(x)^T for a batch of hash vectors (..., d) of t-bit values."""
    hashes = np.asarray(hashes, dtype=np.uint64)
    d = hashes.shape[-1]
    if not 1 <= t <= W:
        raise UsageError(f"hash width must be in [1, 64], got {t}")
    d_pad, t_pad = padded_dims(d, t)
    M = hash_matrix(hashes, d_pad, t_pad)
    if d_pad == 1:
        words = M.rows[..., 0, :]
    elif d_pad >= t_pad:
        # d'/t' stacked t' x t' blocks; row j of every transposed block is
        # column j of that block's coordinates, and the key lists all columns
        # j in order, each spanning the blocks top to bottom.
        batch = M.rows.shape[:-2]
        blocks = M.rows.reshape(batch + (d_pad // t_pad, t_pad, 1))
        if t_pad >= 2:
            blocks = transpose_blocks(BitMatrix(blocks, t_pad), t_pad).rows
        cols = np.swapaxes(blocks, -3, -2).reshape(batch + (d_pad, 1))
        words = pack_rows(cols, t_pad)
    else:
        T = transpose_blocks(M, d_pad)
        words = concatenate_rows(T, d_pad)
    return TransposedKey(words, d_pad * t_pad)


def clz64(x: np.ndarray) -> np.ndarray:
    """Leading zero count of uint64 values (64 for zero)."""
    x = np.array(x, dtype=np.uint64, copy=True)
    n = np.zeros(x.shape, dtype=np.int64)
    for s in (32, 16, 8, 4, 2, 1):
        empty = (x >> np.uint64(W - s)) == 0
        n += np.where(empty, s, 0)
        x = np.where(empty, x << np.uint64(s), x)
    return np.where(x == 0, W, n)


def lcp_words(a: np.ndarray, b: np.ndarray, length_bits: int) -> np.ndarray:
    """Longest common prefix, in bits, of packed strings a and b (batched)."""
    x = np.bitwise_xor(a, b)
    nz = x != 0
    first = np.argmax(nz, axis=-1)
    word = np.take_along_axis(x, first[..., None], axis=-1)[..., 0]
    lcp = first * W + clz64(word)
    lcp = np.where(nz.any(axis=-1), lcp, length_bits)
    return np.minimum(lcp, length_bits)


def lcp_bits(k1: TransposedKey, k2: TransposedKey):
    if k1.length_bits != k2.length_bits or k1.words.shape[-1] != k2.words.shape[-1]:
        raise UsageError(f"key length mismatch: {k1.length_bits} vs {k2.length_bits}")
    out = lcp_words(k1.words, k2.words, k1.length_bits)
    return int(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- sorting

RADIX_MIN = 64


def radix_argsort(words: np.ndarray) -> np.ndarray:
    """Stable order of (N, nw) packed keys, least significant 16-bit digit first.

    Each pass is a stable sort on a uint16 digit column, which numpy performs
    as a counting/radix sort; digits constant across all keys are skipped.
    """
    N, nw = words.shape
    order = np.arange(N)
    for wi in range(nw - 1, -1, -1):
        col = words[:, wi]
        for shift in (0, 16, 32, 48):
            digit = ((col >> np.uint64(shift)) & np.uint64(0xFFFF)).astype(np.uint16)
            if digit.min() == digit.max():
                continue
            order = order[np.argsort(digit[order], kind="stable")]
    return order


def comparison_argsort(words: np.ndarray) -> np.ndarray:
    return np.lexsort(words.T[::-1])


def sort_keys(words: np.ndarray) -> tuple[np.ndarray, str]:
    """Order for packed keys plus the method used ('radix' or 'comparison')."""
    if words.shape[0] < RADIX_MIN:
        return comparison_argsort(words), "comparison"
    return radix_argsort(words), "radix"
