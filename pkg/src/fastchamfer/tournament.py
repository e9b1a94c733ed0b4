"""Depth-2 tournament giving 2-approximate nearest-neighbour distances.

One branch keeps, per random group of about log n points, the point whose
median absolute Cauchy-projection difference to the query is smallest. The
other branch is a uniform sample of P. The answer is the exact l1 minimum
over both candidate sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PointSet, RandomSource, UsageError, as_source, exact_nn_batch, l1_rows

_BLOCK_ELEMS = 1 << 22

PROFILES = ("paper", "fast")


def _log2(x: float) -> float:
    return math.log2(x) if x > 1 else 0.0


@dataclass(frozen=True)
class TournamentParams:
    t: int
    r: int
    w: int
    g: int
    n: int
    scale: float = 1.0

    @classmethod
    def for_instance(cls, t: int, n: int, profile: str = "paper", scale: float = 1.0) -> TournamentParams:
        """Constants r >= 800(2 log t + log log n), w >= 90 t log t log n, g = ceil(log n).

        The "fast" profile multiplies the r and w constants by ``scale``.
        """
        if t < 1 or n < 1:
            raise UsageError("need t >= 1 queries and n >= 1 points")
        if profile not in PROFILES:
            raise UsageError(f"unknown profile {profile!r}")
        if profile == "paper":
            scale = 1.0
        if scale <= 0:
            raise UsageError("scale must be positive")
        log_n = _log2(n)
        r = max(1, math.ceil(scale * 800 * (2 * _log2(t) + _log2(log_n))))
        w = math.ceil(scale * 90 * t * _log2(t) * log_n)
        g = max(1, math.ceil(log_n))
        return cls(t=t, r=r, w=w, g=g, n=n, scale=scale)

    @property
    def w_effective(self) -> int:
        return min(self.w, self.n)

    @property
    def exact_cap(self) -> bool:
        """The uniform branch covers all of P, so every answer is exact."""
        return self.w >= self.n


@dataclass
class ProjectionSketch:
    vectors: np.ndarray       # (r, d) Cauchy vectors
    projections: np.ndarray   # (|P|, r): projections[i, j] = vectors[j] . P[i]
    groups: np.ndarray        # (n_groups, g) P indices, ascending within a group, -1 padded

    @property
    def nbytes(self) -> int:
        return self.vectors.nbytes + self.projections.nbytes + self.groups.nbytes


def cauchy_from_uniform(u):
    """Standard Cauchy quantile tan(pi (u - 1/2))."""
    return np.tan(np.pi * (np.asarray(u, dtype=np.float64) - 0.5))


def sample_cauchy(shape, gen: np.random.Generator) -> np.ndarray:
    u = gen.random(shape)
    while True:
        bad = u == 0.0
        if not bad.any():
            break
        u[bad] = gen.random(int(bad.sum()))
    return cauchy_from_uniform(u)


def sample_cauchy_vector(d: int, rng) -> np.ndarray:
    if d < 1:
        raise UsageError("dimension must be >= 1")
    gen = rng if isinstance(rng, np.random.Generator) else as_source(rng).stream("cauchy", 0)
    return sample_cauchy(d, gen)


def median_rank(r: int) -> int:
    """0-based position of the lower median among r sorted values."""
    return (r + 1) // 2 - 1


def median_abs_diff(q_proj, p_proj) -> float:
    """Lower median of |q_j - p_j| by linear-time selection (introselect)."""
    q_proj = np.asarray(q_proj, dtype=np.float64)
    p_proj = np.asarray(p_proj, dtype=np.float64)
    if q_proj.shape != p_proj.shape or q_proj.ndim != 1 or q_proj.size < 1:
        raise UsageError("projection vectors must be equal-length and non-empty")
    k = median_rank(q_proj.size)
    return float(np.partition(np.abs(q_proj - p_proj), k)[k])


def project(X: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ vectors.T


def build_sketch(P: PointSet, params: TournamentParams, rng) -> ProjectionSketch:
    rng = as_source(rng)
    vectors = np.stack([sample_cauchy(P.d, rng.stream("tournament-proj", j)) for j in range(params.r)])
    perm = rng.stream("tournament-partition", 0).permutation(P.n)
    n_groups = -(-P.n // params.g)
    groups = np.full(n_groups * params.g, -1, dtype=np.int64)
    groups[: P.n] = perm
    groups = groups.reshape(n_groups, params.g)
    groups = np.sort(np.where(groups < 0, P.n, groups), axis=1)
    groups[groups == P.n] = -1
    return ProjectionSketch(vectors=vectors, projections=project(P.coords, vectors), groups=groups)


def _argmin_lowest(dist: np.ndarray, cand: np.ndarray, fill: int):
    """Row-wise minimum of dist and the smallest candidate index attaining it."""
    best = dist.min(axis=1)
    hit = dist == best[:, None]
    return best, np.where(hit, cand, fill).min(axis=1)


def _group_winners(q_proj: np.ndarray, sketch: ProjectionSketch) -> np.ndarray:
    """Per query row, the argmin-median point of every group: (m, n_groups) P indices."""
    m, r = q_proj.shape
    n = sketch.projections.shape[0]
    k = median_rank(r)
    med = np.empty((m, n + 1))
    med[:, n] = np.inf
    step_q = max(1, _BLOCK_ELEMS // max(1, n * r))
    step_p = max(1, _BLOCK_ELEMS // max(1, step_q * r))
    for qlo in range(0, m, step_q):
        qb = q_proj[qlo:qlo + step_q, None, :]
        for plo in range(0, n, step_p):
            phi = min(plo + step_p, n)
            diff = np.abs(sketch.projections[None, plo:phi, :] - qb)
            med[qlo:qlo + step_q, plo:phi] = np.partition(diff, k, axis=2)[..., k]
    grp = sketch.groups
    pick = med[:, np.where(grp < 0, n, grp)].argmin(axis=2)
    return grp[np.arange(grp.shape[0])[None, :], pick]


def _answer(Q: np.ndarray, P: PointSet, sketch: ProjectionSketch, params: TournamentParams,
            rng: RandomSource, offset: int, wide: bool):
    """Full tournament for query rows Q[i] (query ids offset + i)."""
    m = Q.shape[0]
    winners = _group_winners(project(Q, sketch.vectors), sketch)
    d_tilde = l1_rows(Q[:, None, :], P.coords[winners], wide)
    best_t, p_t = _argmin_lowest(d_tilde, winners, P.n)
    values = np.empty(m, dtype=object if wide else np.int64)
    witness = np.empty(m, dtype=np.int64)
    for i in range(m):
        v, p = best_t[i], p_t[i]
        if params.w_effective > 0:
            if params.exact_cap:
                sbar = np.arange(P.n)
            else:
                sbar = rng.stream("tournament-sbar", offset + i).integers(0, P.n, size=params.w)
            d_bar = l1_rows(Q[i][None, :], P.coords[sbar], wide)
            vb, pb = _argmin_lowest(d_bar[None, :], sbar[None, :], P.n)
            if vb[0] < v or (vb[0] == v and pb[0] < p):
                v, p = vb[0], pb[0]
        values[i], witness[i] = v, p
    return values, witness


def tournament_query(q, sketch: ProjectionSketch, P: PointSet, params: TournamentParams,
                     rng, index: int = 0) -> tuple[int, int]:
    """(D', witness) for one query; the uniform sample uses stream ("tournament-sbar", index)."""
    q = np.asarray(q, dtype=np.int64).reshape(1, -1)
    if q.shape[1] != P.d:
        raise UsageError(f"dimension mismatch: {q.shape[1]} vs {P.d}")
    values, witness = _answer(q, P, sketch, params, as_source(rng), index, P.wide)
    return int(values[0]), int(witness[0])


@dataclass
class TournamentResult:
    values: np.ndarray
    witness: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(zip(self.values.tolist(), self.witness.tolist()))

    def __len__(self) -> int:
        return len(self.values)


def tournament_batch(queries, P: PointSet, params: TournamentParams, rng,
                     shortcut: bool = True, ids=None) -> TournamentResult:
    """Answer all queries against one sketch.

    With ``ids`` the queries are the rows ``queries[ids]`` (query i is
    ``queries[ids[i]]``), which avoids materializing repeated rows.

    When the uniform branch already spans P (w >= |P|) each answer equals the
    exact nearest-neighbour distance whatever the projection branch returns,
    so with ``shortcut`` the sketch is skipped and distinct queries are solved
    exactly once. The result is identical to the full computation.
    """
    rng = as_source(rng)
    base = queries.coords if isinstance(queries, PointSet) else np.asarray(queries, dtype=np.int64)
    base = base.reshape(-1, P.d)
    if ids is None:
        ids = np.arange(base.shape[0])
    ids = np.asarray(ids, dtype=np.int64).ravel()
    if ids.size != params.t:
        raise UsageError(f"params were sized for t={params.t} queries, got {ids.size}")
    wide = P.wide or (isinstance(queries, PointSet) and queries.wide)
    if params.exact_cap and shortcut:
        # counting pass instead of a sort: ids index a small base set
        uniq_ids = np.flatnonzero(np.bincount(ids, minlength=base.shape[0]))
        slot = np.empty(base.shape[0], dtype=np.int64)
        slot[uniq_ids] = np.arange(uniq_ids.size)
        uniq, inv2 = np.unique(base[uniq_ids], axis=0, return_inverse=True)
        idx, dist = exact_nn_batch(uniq, P)
        inverse = inv2.ravel()[slot[ids]]
        return TournamentResult(dist[inverse], idx[inverse],
                                {"exact_cap": True, "distinct_queries": len(uniq), "sketch_bytes": 0})
    sketch = build_sketch(P, params, rng)
    values = np.empty(ids.size, dtype=object if wide else np.int64)
    witness = np.empty(ids.size, dtype=np.int64)
    step = max(1, _BLOCK_ELEMS // max(1, sketch.groups.size * P.d))
    for lo in range(0, ids.size, step):
        v, p = _answer(base[ids[lo:lo + step]], P, sketch, params, rng, lo, wide)
        values[lo:lo + step], witness[lo:lo + step] = v, p
    return TournamentResult(values, witness,
                            {"exact_cap": params.exact_cap, "sketch_bytes": sketch.nbytes})
