"""Seeded synthetic instances."""

from __future__ import annotations

import numpy as np

from .core import PointSet, UsageError


def uniform_pair(n_a: int, n_b: int, d: int, alpha: int, seed: int) -> tuple[PointSet, PointSet]:
    """Coordinates uniform in [0, alpha)."""
    gen = np.random.default_rng(seed)
    A = gen.integers(0, alpha, size=(n_a, d), dtype=np.int64)
    B = gen.integers(0, alpha, size=(n_b, d), dtype=np.int64)
    return PointSet(A, alpha), PointSet(B, alpha)


def clustered_pair(n: int, d: int, alpha: int, seed: int, n_centers: int | None = None,
                   max_offset: int = 64) -> tuple[PointSet, PointSet, np.ndarray]:
    """B holds well separated centers; every a in A is a center plus a small offset.

    Returns (A, B, opt) with opt[i] the exact nearest-neighbour distance of A[i]
    in B, known by construction: offsets have l1 norm <= max_offset per point and
    centers are more than 2 * max_offset apart, so a's own center is nearest.
    Offsets are chosen so opt spans several scales, including zero.
    """
    gen = np.random.default_rng(seed)
    m = n_centers or n
    lo, hi = max_offset, alpha - max_offset
    if hi <= lo:
        raise UsageError("alpha too small for the requested offsets")
    for _ in range(100):
        centers = gen.integers(lo, hi, size=(m, d), dtype=np.int64)
        if m == 1 or _min_pairwise(centers) > 2 * max_offset:
            break
    else:
        raise UsageError("could not place well separated centers; increase alpha")
    owner = gen.integers(0, m, size=n)
    # target l1 norm 0 or 2^j, spread over coordinates with random signs
    scales = np.concatenate([[0], 2 ** np.arange(max_offset.bit_length())])
    target = np.minimum(gen.choice(scales, size=n), max_offset)
    offsets = np.zeros((n, d), dtype=np.int64)
    for i in range(n):
        if target[i]:
            cut = np.sort(gen.integers(0, target[i] + 1, size=d - 1))
            parts = np.diff(np.concatenate([[0], cut, [target[i]]]))
            offsets[i] = parts * gen.choice([-1, 1], size=d)
    A = centers[owner] + offsets
    opt = np.abs(offsets).sum(axis=1)
    return PointSet(A, alpha), PointSet(centers, alpha), opt


def _min_pairwise(X: np.ndarray) -> int:
    """Smallest l1 distance between two distinct rows (blockwise, O(m^2 d))."""
    m = X.shape[0]
    step = max(1, (1 << 22) // (m * X.shape[1]))
    best = np.iinfo(np.int64).max
    for lo in range(0, m, step):
        D = np.abs(X[lo:lo + step, None, :] - X[None, :, :]).sum(axis=2)
        D[np.arange(D.shape[0]), np.arange(lo, lo + D.shape[0])] = best
        best = min(best, int(D.min()))
    return best
