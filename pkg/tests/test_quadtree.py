import itertools

import numpy as np
import pytest

import oracles as O
from fastchamfer import bitops
from fastchamfer.core import PointSet, RandomSource, UsageError, exact_nn_batch
from fastchamfer.quadtree import (
    GridShift,
    build_sorted_index,
    h_k,
    hash_point,
    level_of_lcp,
    nn_candidate,
    nn_candidates,
    quadtree_estimates,
)
from fastchamfer.synth import uniform_pair


def test_hash_point_examples():
    assert hash_point([5], GridShift([3], 4)).tolist() == [8]
    x = np.array([[1, 2, 3]])
    assert hash_point(x, GridShift([0, 0, 0], 4)).tolist() == x.tolist()


def test_hash_point_matches_addition():
    gen = np.random.default_rng(0)
    for _ in range(50):
        x = gen.integers(0, 2**11, size=6)
        z = gen.integers(0, 2**11, size=6)
        assert hash_point(x, GridShift(z, 12)).tolist() == [int(a) + int(b) for a, b in zip(x, z)]


def test_hash_overflow_is_internal_error():
    with pytest.raises(AssertionError):
        hash_point([15], GridShift([7], 4))


def test_shift_range_enforced():
    with pytest.raises(UsageError):
        GridShift([8], 4)


def test_h_k_examples():
    s = GridShift([3], 4)
    assert h_k([5], s, 0).tolist() == hash_point([5], s).tolist()
    assert h_k([5], s, 1).tolist() == [4]
    assert h_k([5], s, 4).tolist() == [0]


def test_h_k_is_prefix_of_key_exhaustive_d2_t4():
    # level-k cell equals the top (t - k) bits of every coordinate, read from the key
    t, d = 4, 2
    dp, tp = bitops.padded_dims(d, t)
    side = 1 << (t - 1)
    for x in itertools.product(range(side), repeat=d):
        for z in itertools.product(range(side), repeat=d):
            key = O.transposed_key([a + b for a, b in zip(x, z)], t)
            shift = GridShift(z, t)
            for k in range(t + 1):
                prefix = key[: dp * (tp - k)]
                from_key = [0] * d
                for j in range(tp - k):
                    for i in range(d):
                        from_key[i] = 2 * from_key[i] + prefix[j * dp + (dp - d) + i]
                assert tuple(h_k(x, shift, k).tolist()) == tuple(from_key) == O.cell(x, z, k)


def test_nested_cells_are_monotone():
    gen = np.random.default_rng(1)
    for _ in range(200):
        t = 8
        q, p = gen.integers(0, 2 ** (t - 1), size=(2, 3))
        s = GridShift(gen.integers(0, 2 ** (t - 1), size=3), t)
        same = [bool((h_k(q, s, k) == h_k(p, s, k)).all()) for k in range(t + 1)]
        first = same.index(True)
        assert all(same[first:])


def test_shared_cell_bounds_distance():
    gen = np.random.default_rng(2)
    d, t = 4, 10
    for _ in range(500):
        q, p = gen.integers(0, 2 ** (t - 1), size=(2, d))
        s = GridShift(gen.integers(0, 2 ** (t - 1), size=d), t)
        for k in range(t + 1):
            if (h_k(q, s, k) == h_k(p, s, k)).all():
                assert O.l1(q, p) <= 2**k * d


def test_sorted_index_matches_comparison_sort():
    A, B = uniform_pair(128, 128, 8, 2**10, 3)
    shift = GridShift(np.random.default_rng(3).integers(0, 2**10, size=8), 11)
    idx = build_sorted_index(A, B, shift)
    assert idx.sort_method == "radix"
    X = np.concatenate([A.coords, B.coords])
    keys = [O.transposed_key(row, 11) for row in hash_point(X, shift).tolist()]
    assert [O.words_to_bits(k, idx.length_bits) for k in idx.keys] == sorted(keys)
    pos = np.arange(len(keys))
    for i in range(len(keys)):
        before = pos[: i + 1][idx.is_p[: i + 1]]
        assert idx.prev_p[i] == (before[-1] if before.size else -1)


def test_candidate_lcp_is_global_maximum():
    gen = np.random.default_rng(4)
    for trial in range(10):
        Q, P = uniform_pair(40, 60, 5, 2**8, trial)
        shift = GridShift(gen.integers(0, 2**8, size=5), 9)
        idx = build_sorted_index(Q, P, shift)
        p_keys = bitops.encode_key(hash_point(P.coords, shift), 9)
        q_keys = bitops.encode_key(hash_point(Q.coords, shift), 9)
        cand, lcp = nn_candidates(idx)
        for i in range(Q.n):
            full = bitops.lcp_words(q_keys.words[i][None, :], p_keys.words, p_keys.length_bits).max()
            assert lcp[i] == full
            assert bitops.lcp_words(q_keys.words[i], p_keys.words[cand[i]], p_keys.length_bits) == full


def test_singleton_p_and_one_sided_neighbour():
    Q = PointSet([[0, 0], [7, 7], [3, 1]], alpha=8)
    P = PointSet([[4, 4]], alpha=8)
    idx = build_sorted_index(Q, P, GridShift([0, 0], 4))
    for i in range(Q.n):
        assert nn_candidate(idx, int(idx.q_pos[i]))[0] == 0


def test_identical_keys_give_full_lcp():
    Q = PointSet([[3, 5]], alpha=8)
    P = PointSet([[1, 1], [3, 5]], alpha=8)
    idx = build_sorted_index(Q, P, GridShift([2, 1], 4))
    p, lcp = nn_candidate(idx, int(idx.q_pos[0]))
    assert (p, lcp) == (1, idx.length_bits)


def test_all_identical_points():
    X = PointSet(np.full((5, 3), 2), alpha=4)
    est = quadtree_estimates(X, X, 0)
    assert est.values.tolist() == [0] * 5


def test_estimates_p_equals_q_are_zero():
    A, _ = uniform_pair(300, 1, 12, 2**16, 5)
    assert int(quadtree_estimates(A, A, 9).values.max()) == 0


def test_estimates_single_p_exact():
    A, B = uniform_pair(50, 1, 7, 2**12, 6)
    est = quadtree_estimates(A, B, 1)
    assert est.values.tolist() == exact_nn_batch(A, B)[1].tolist()


def test_estimates_are_sound_and_realised():
    A, B = uniform_pair(512, 512, 16, 2**16, 7)
    _, opt = exact_nn_batch(A, B)
    for seed in range(5):
        est = quadtree_estimates(A, B, RandomSource(seed))
        assert (est.values >= opt).all()
        assert est.values.tolist() == [O.l1(a, B.coords[w]) for a, w in zip(A.coords.tolist(), est.witness)]
        assert (est.level == level_of_lcp(est.lcp, est.d_pad, est.t_pad)).all()


def test_estimates_deterministic_per_seed():
    A, B = uniform_pair(100, 80, 6, 2**10, 8)
    a = quadtree_estimates(A, B, RandomSource(3))
    b = quadtree_estimates(A, B, RandomSource(3))
    assert np.array_equal(a.values, b.values) and np.array_equal(a.witness, b.witness)
