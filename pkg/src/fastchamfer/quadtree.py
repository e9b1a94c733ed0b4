"""Two randomly shifted nested-grid hashings and LCP nearest-cell search.

Each tree maps a point x to h(x) = x + z (integer shift z) written as t-bit
values. Two points share the side-2^k cell exactly when the top t - k bits of
every coordinate agree, which is a prefix of the transposed key. After sorting
Q and P together by key, the P point sharing the longest prefix with a query
is one of its two P-neighbours in sorted order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bitops
from .core import PointSet, RandomSource, UsageError, as_source, l1_rows, levels


@dataclass(frozen=True)
class GridShift:
    z: np.ndarray
    t: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.uint64)
        if np.any(z >= np.uint64(1) << np.uint64(self.t - 1)):
            raise UsageError("shift coordinates must lie in [0, 2^(t-1))")
        object.__setattr__(self, "z", z)


def sample_shift(d: int, t: int, gen: np.random.Generator) -> GridShift:
    return GridShift(gen.integers(0, 1 << (t - 1), size=d, dtype=np.uint64), t)


def hash_point(x, shift: GridShift) -> np.ndarray:
    """h(x) = x + z per coordinate, checked to fit in t bits. Works on (..., d) arrays."""
    x = np.asarray(x)
    if np.any(x < 0):
        raise UsageError("coordinates must be non-negative")
    h = x.astype(np.uint64) + shift.z
    if shift.t < 64 and np.any(h >> np.uint64(shift.t)):
        raise AssertionError(f"hash overflows t={shift.t} bits; t was sized too small")
    return h


def h_k(x, shift: GridShift, k: int) -> np.ndarray:
    """Level-k cell id floor((x_i + z_i) / 2^k), i.e. the top t - k bits of h(x)."""
    if not 0 <= k <= shift.t:
        raise UsageError(f"level must be in [0, {shift.t}], got {k}")
    h = hash_point(x, shift)
    if k >= 64:
        return np.zeros_like(h)
    return h >> np.uint64(k)


def level_of_lcp(lcp, d_pad: int, t_pad: int):
    """Finest level k whose cell is certainly shared, given an LCP length in bits."""
    return t_pad - np.asarray(lcp) // d_pad


@dataclass
class SortedKeyIndex:
    keys: np.ndarray        # (N, nw) sorted packed keys
    is_p: np.ndarray        # owner tag per entry
    index: np.ndarray       # original index in Q or P
    prev_p: np.ndarray      # position of nearest P entry at or before, -1 if none
    next_p: np.ndarray      # position of nearest P entry at or after, N if none
    q_pos: np.ndarray       # sorted position of every Q point
    length_bits: int
    d_pad: int
    t_pad: int
    sort_method: str


def build_sorted_index(Q: PointSet, P: PointSet, shift: GridShift) -> SortedKeyIndex:
    if Q.d != P.d:
        raise UsageError(f"dimension mismatch: {Q.d} vs {P.d}")
    X = np.concatenate([Q.coords, P.coords])
    key = bitops.encode_key(hash_point(X, shift), shift.t)
    order, method = bitops.sort_keys(key.words)
    N = X.shape[0]
    is_p = order >= Q.n
    pos = np.arange(N)
    prev_p = np.maximum.accumulate(np.where(is_p, pos, -1))
    next_p = np.minimum.accumulate(np.where(is_p, pos, N)[::-1])[::-1]
    q_pos = np.empty(Q.n, dtype=np.int64)
    q_pos[order[~is_p]] = pos[~is_p]
    d_pad, t_pad = bitops.padded_dims(Q.d, shift.t)
    return SortedKeyIndex(
        keys=key.words[order],
        is_p=is_p,
        index=np.where(is_p, order - Q.n, order),
        prev_p=prev_p,
        next_p=next_p,
        q_pos=q_pos,
        length_bits=key.length_bits,
        d_pad=d_pad,
        t_pad=t_pad,
        sort_method=method,
    )


def nn_candidates(idx: SortedKeyIndex, positions=None) -> tuple[np.ndarray, np.ndarray]:
    """For Q entries at the given sorted positions: (P index, lcp) of the
    neighbouring P entry sharing the longer prefix; ties prefer the earlier one."""
    if positions is None:
        positions = idx.q_pos
    positions = np.asarray(positions)
    N = idx.keys.shape[0]
    if not idx.is_p.any():
        raise UsageError("index holds no P points")
    before = idx.prev_p[positions]
    after = idx.next_p[positions]
    has_before = before >= 0
    has_after = after < N
    kq = idx.keys[positions]
    lcp_before = np.where(
        has_before, bitops.lcp_words(kq, idx.keys[np.maximum(before, 0)], idx.length_bits), -1)
    lcp_after = np.where(
        has_after, bitops.lcp_words(kq, idx.keys[np.minimum(after, N - 1)], idx.length_bits), -1)
    take_before = lcp_before >= lcp_after
    best = np.where(take_before, before, after)
    return idx.index[best], np.maximum(lcp_before, lcp_after)


def nn_candidate(idx: SortedKeyIndex, q_position: int) -> tuple[int, int]:
    if idx.is_p[q_position]:
        raise UsageError("position does not hold a Q entry")
    p, l = nn_candidates(idx, np.array([q_position]))
    return int(p[0]), int(l[0])


@dataclass
class QuadTreeEstimates:
    values: np.ndarray      # D_i >= opt_i, exact l1 distance to the witness
    witness: np.ndarray     # P index realising D_i
    lcp: np.ndarray         # winning LCP length in bits
    level: np.ndarray       # cell level k certified by that LCP
    tree: np.ndarray        # 0 or 1: which shifted tree supplied the witness
    d_pad: int
    t_pad: int
    sort_methods: tuple


def quadtree_estimates(Q: PointSet, P: PointSet, rng: RandomSource | int | None = None) -> QuadTreeEstimates:
    """Per-query upper bounds on the nearest-neighbour distance from two shifted trees."""
    rng = as_source(rng)
    t = levels(max(Q.alpha, P.alpha))
    results = []
    for tree in (0, 1):
        shift = sample_shift(Q.d, t, rng.stream("quadtree-shift", tree))
        idx = build_sorted_index(Q, P, shift)
        results.append((idx,) + nn_candidates(idx))
    (i0, p0, l0), (i1, p1, l1) = results
    first = l0 >= l1
    witness = np.where(first, p0, p1)
    lcp = np.where(first, l0, l1)
    wide = Q.wide or P.wide
    values = l1_rows(Q.coords, P.coords[witness], wide)
    return QuadTreeEstimates(
        values=values,
        witness=witness,
        lcp=lcp,
        level=level_of_lcp(lcp, i0.d_pad, i0.t_pad),
        tree=np.where(first, 0, 1),
        d_pad=i0.d_pad,
        t_pad=i0.t_pad,
        sort_methods=(i0.sort_method, i1.sort_method),
    )
