import numpy as np
import pytest

import oracles as O
from fastchamfer import bitops as B
from fastchamfer.core import UsageError


def random_bits(gen, *shape):
    return gen.integers(0, 2, size=shape, dtype=np.uint8)


def test_pack_roundtrip_msb_first():
    bits = np.array([1, 0, 1] + [0] * 60 + [1, 1], dtype=np.uint8)
    words = B.pack_bits(bits)
    assert words.tolist() == [0xA000000000000001, 0x8000000000000000]
    assert np.array_equal(B.unpack_bits(words, bits.size), bits)


def test_identity_2x2_transpose():
    M = B.BitMatrix.from_bits(np.eye(2, dtype=np.uint8))
    assert np.array_equal(B.transpose_blocks(M, 2).to_bits(), np.eye(2))


def test_8x8_quadrants_transposed_with_w4():
    bits = random_bits(np.random.default_rng(0), 8, 8)
    out = B.transpose_blocks(B.BitMatrix.from_bits(bits), 4).to_bits()
    for bi in (0, 4):
        for bj in (0, 4):
            assert np.array_equal(out[bi:bi + 4, bj:bj + 4], bits[bi:bi + 4, bj:bj + 4].T)


def test_transpose_64x64_against_per_bit_oracle():
    gen = np.random.default_rng(1)
    bits = random_bits(gen, 1000, 64, 64)
    out = B.transpose_blocks(B.BitMatrix.from_bits(bits), 64).to_bits()
    assert np.array_equal(out, np.swapaxes(bits, 1, 2))
    for k in range(5):
        assert out[k].tolist() == O.block_transpose(bits[k].tolist(), 64)


@pytest.mark.parametrize("I,J,w", [(2, 4, 2), (4, 128, 4), (16, 16, 8), (32, 64, 32), (8, 256, 2)])
def test_transpose_shapes(I, J, w):
    bits = random_bits(np.random.default_rng(I * J + w), 6, I, J)
    out = B.transpose_blocks(B.BitMatrix.from_bits(bits), w).to_bits()
    for k in range(6):
        assert out[k].tolist() == O.block_transpose(bits[k].tolist(), w)


def test_transpose_rejects_bad_arguments():
    M = B.BitMatrix.from_bits(np.zeros((4, 8), dtype=np.uint8))
    for w in (1, 3, 8):
        with pytest.raises(UsageError):
            B.transpose_blocks(M, w)
    with pytest.raises(UsageError):
        B.transpose_blocks(B.BitMatrix.from_bits(np.zeros((8, 4), dtype=np.uint8)), 2)
    with pytest.raises(UsageError):
        B.transpose_blocks(B.BitMatrix.from_bits(np.zeros((3, 4), dtype=np.uint8)), 2)


def test_concatenate_single_row_is_identity():
    bits = random_bits(np.random.default_rng(2), 1, 128)
    for w in (1, 8, 128):
        out = B.concatenate_rows(B.BitMatrix.from_bits(bits), w)
        assert np.array_equal(B.unpack_bits(out, 128), bits[0])


def test_one_merge_step_on_4_by_4w():
    # rows a|b|c|d of w-bit blocks: one step pairs rows 0,1 and 2,3 block by block
    w = 8
    bits = random_bits(np.random.default_rng(3), 4, 4 * w)
    rows = B.BitMatrix.from_bits(bits).rows
    out = B.unpack_bits(B.concatenate_step(rows, 4 * w, w), 8 * w)
    blk = lambda r, c: bits[r, c * w:(c + 1) * w]
    for half in (0, 1):
        expect = np.concatenate([blk(2 * half + s, c) for c in range(4) for s in (0, 1)])
        assert np.array_equal(out[half], expect)


def test_concatenate_8x256_w8_against_block_oracle():
    gen = np.random.default_rng(4)
    bits = random_bits(gen, 50, 8, 256)
    out = B.unpack_bits(B.concatenate_rows(B.BitMatrix.from_bits(bits), 8), 8 * 256)
    for k in range(50):
        assert out[k].tolist() == O.block_concatenate(bits[k].tolist(), 8)


def test_concatenate_rejects_bad_width():
    M = B.BitMatrix.from_bits(np.zeros((4, 16), dtype=np.uint8))
    for w in (2, 32, 6):
        with pytest.raises(UsageError):
            B.concatenate_rows(M, w)


def test_encode_key_small_cases():
    key = B.encode_key(np.array([0b1011], dtype=np.uint64), 4)
    assert O.words_to_bits(key.words, key.length_bits) == [1, 0, 1, 1]
    key = B.encode_key(np.array([0b10, 0b01], dtype=np.uint64), 2)
    assert O.words_to_bits(key.words, 4) == [1, 0, 0, 1]
    assert key.words.tolist() == [0x9000000000000000]


@pytest.mark.parametrize("d", [4, 16, 64, 256])
def test_encode_key_t32_against_gather(d):
    gen = np.random.default_rng(d)
    h = gen.integers(0, 2**32, size=(20, d), dtype=np.uint64)
    key = B.encode_key(h, 32)
    assert key.length_bits == d * 32
    for k in range(20):
        assert O.words_to_bits(key.words[k], key.length_bits) == O.transposed_key(h[k].tolist(), 32)


@pytest.mark.parametrize("d,t", [(3, 5), (5, 3), (1, 64), (2, 64), (7, 17), (33, 2)])
def test_encode_key_padding(d, t):
    gen = np.random.default_rng(d * 100 + t)
    h = gen.integers(0, 2**t, size=(10, d), dtype=np.uint64)
    key = B.encode_key(h, t)
    for k in range(10):
        assert O.words_to_bits(key.words[k], key.length_bits) == O.transposed_key(h[k].tolist(), t)


def test_lcp_cases():
    gen = np.random.default_rng(5)
    h = gen.integers(0, 2**16, size=(1, 8), dtype=np.uint64)
    k = B.encode_key(h, 16)
    assert B.lcp_bits(k, k) == 128
    flipped = B.TransposedKey(k.words ^ np.uint64(1 << 63), 128)
    assert B.lcp_bits(k, flipped) == 0
    with pytest.raises(UsageError):
        B.lcp_bits(k, B.encode_key(h[:, :4], 16))


def test_lcp_against_bit_scan():
    gen = np.random.default_rng(6)
    for _ in range(1000):
        length = int(gen.integers(1, 300))
        a = gen.integers(0, 2, size=length, dtype=np.uint8)
        b = a.copy()
        cut = int(gen.integers(0, length + 1))
        b[cut:] = gen.integers(0, 2, size=length - cut, dtype=np.uint8)
        got = B.lcp_bits(B.TransposedKey(B.pack_bits(a), length), B.TransposedKey(B.pack_bits(b), length))
        assert got == O.lcp(a.tolist(), b.tolist())


def test_clz64():
    vals = np.array([0, 1, 2**63, 2**40 + 5, 2**64 - 1], dtype=np.uint64)
    assert B.clz64(vals).tolist() == [64, 63, 0, 23, 0]


def test_radix_sort_matches_comparison_sort():
    gen = np.random.default_rng(7)
    words = gen.integers(0, 2**64, size=(5000, 3), dtype=np.uint64)
    words[::7] = words[3]  # duplicates must keep their input order
    r = B.radix_argsort(words)
    c = B.comparison_argsort(words)
    assert np.array_equal(r, c)
    assert B.sort_keys(words)[1] == "radix"
    assert B.sort_keys(words[:10])[1] == "comparison"
