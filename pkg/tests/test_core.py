import numpy as np
import pytest

import oracles as O
from fastchamfer.core import (
    DerivedScale,
    PointSet,
    RandomSource,
    RegimeWarning,
    UsageError,
    check_regime,
    distortion,
    exact_chamfer,
    exact_nn,
    exact_nn_batch,
    l1_distance,
    levels,
)
from fastchamfer.synth import uniform_pair


def test_l1_small_cases():
    assert l1_distance((0, 0), (1, 2)) == 3
    assert l1_distance((7, 9, 1), (7, 9, 1)) == 0


def test_l1_matches_loop_oracle():
    gen = np.random.default_rng(0)
    for _ in range(100):
        p, q = gen.integers(0, 2**20, size=(2, 16))
        assert l1_distance(p, q) == O.l1(p.tolist(), q.tolist())


def test_l1_dimension_mismatch():
    with pytest.raises(UsageError):
        l1_distance((1, 2), (1, 2, 3))


def test_exact_nn_one_dimensional():
    P = PointSet([[1], [4], [9]])
    assert exact_nn([5], P) == (1, 1)
    assert exact_nn([9], P) == (2, 0)


def test_exact_nn_ties_go_to_smallest_index():
    P = PointSet([[2], [6], [2]])
    assert exact_nn([4], P) == (0, 2)


def test_exact_nn_matches_scan():
    gen = np.random.default_rng(1)
    P = PointSet(gen.integers(0, 1000, size=(200, 8)))
    for q in gen.integers(0, 1000, size=(20, 8)):
        assert exact_nn(q, P) == O.nn(q.tolist(), P.coords.tolist())


def test_exact_chamfer_values():
    assert exact_chamfer(PointSet([[0, 0]]), PointSet([[1, 2]])) == 3
    A = PointSet(np.arange(12).reshape(4, 3))
    assert exact_chamfer(A, A) == 0


def test_exact_chamfer_frozen_oracle_values():
    # values from the double-loop oracle on this seeded instance
    A, B = uniform_pair(30, 40, 8, 2**10, 7)
    assert exact_chamfer(A, B) == 39890
    assert exact_chamfer(B, A) == 57772
    A, B = uniform_pair(100, 100, 8, 2**20, 11)
    assert exact_chamfer(A, B) == 122586917


def test_exact_chamfer_matches_double_loop():
    A, B = uniform_pair(100, 80, 8, 2**12, 3)
    assert exact_chamfer(A, B) == O.chamfer(A.coords.tolist(), B.coords.tolist())


def test_wide_accumulator_no_overflow():
    big = 2**62
    A = PointSet([[big - 1] * 4], alpha=2**62)
    B = PointSet([[0] * 4], alpha=2**62)
    assert A.wide
    assert exact_chamfer(A, B) == 4 * (big - 1)
    assert exact_nn_batch(A, B)[1][0] == 4 * (big - 1)


def test_pointset_validation_and_alpha():
    P = PointSet([[0, 5], [3, 2]])
    assert (P.n, P.d, P.alpha) == (2, 2, 8)
    assert PointSet([[0]]).alpha == 2
    assert PointSet([[3]], alpha=100).alpha == 128
    with pytest.raises(UsageError):
        PointSet([[-1, 2]])
    with pytest.raises(UsageError):
        PointSet([[0.5, 2]])
    with pytest.raises(UsageError):
        PointSet(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        P.coords[0, 0] = 1


def test_random_source_streams_are_reproducible_and_distinct():
    a = RandomSource(5).stream("x", 1).random(4)
    b = RandomSource(5).stream("x", 1).random(4)
    c = RandomSource(5).stream("x", 2).random(4)
    d = RandomSource(5).stream("y", 1).random(4)
    e = RandomSource(5).child("x", 1).stream("x", 1).random(4)
    assert np.array_equal(a, b)
    for other in (c, d, e):
        assert not np.array_equal(a, other)


def test_derived_scale():
    assert distortion(1024, 64) == 30.0
    assert distortion(1024, 8) == 8.0
    assert distortion(1, 1) == 1.0
    assert levels(2) == 2 and levels(1024) == 11 and levels(1000) == 11
    s = DerivedScale.from_instance(2**20, 4, 2**10, 0.5)
    assert (s.D_bar, s.t_levels) == (4.0, 11)
    with pytest.raises(UsageError):
        DerivedScale.from_instance(100, 4, 8, 1.5)


def test_regime_check_warns_or_raises():
    assert check_regime(2**30, 0.1)
    with pytest.warns(RegimeWarning):
        assert not check_regime(1000, 0.1)
    with pytest.raises(UsageError):
        check_regime(1000, 0.1, strict=True)
