"""Chamfer distance estimation: quadtree importance sampling, tournament
refinement, rejection sampling and exact evaluation of the survivors."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import DerivedScale, PointSet, RandomSource, UsageError, as_source, exact_nn_batch
from .quadtree import quadtree_estimates
from .tournament import TournamentParams, sample_cauchy, tournament_batch

DEFAULT_FAST_SCALE = 2e-4
MAX_RETRIES = 3


def _ceil(x: float) -> int:
    # 10 / 0.1**2 evaluates to 999.9999999999999; keep such values from rounding up twice
    return math.ceil(x - 1e-9)


def survivor_count(epsilon: float) -> int:
    """s = ceil(10 / eps^2)."""
    return _ceil(10.0 / epsilon**2)


def candidate_count(D_bar: float, epsilon: float, profile: str = "paper", scale: float = 1.0) -> int:
    """q = ceil(1e4 D / eps^2); the fast profile scales the constant, keeping q >= 10 s."""
    if profile == "paper":
        return _ceil(1e4 * D_bar / epsilon**2)
    return max(10 * survivor_count(epsilon), _ceil(scale * 1e4 * D_bar / epsilon**2))


@dataclass
class SamplingDistribution:
    weights: np.ndarray
    total: float
    cumulative: np.ndarray
    support: np.ndarray

    @classmethod
    def from_weights(cls, weights) -> SamplingDistribution:
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise UsageError("weights must be finite and non-negative")
        return cls(weights=w, total=math.fsum(w.tolist()), cumulative=np.cumsum(w),
                   support=np.flatnonzero(w > 0))

    def probabilities(self) -> np.ndarray:
        return self.weights / self.total

    def sample(self, gen: np.random.Generator, size=None):
        if not self.total > 0:
            raise UsageError("cannot sample from a distribution with zero total weight")
        u = gen.random(size) * self.cumulative[-1]
        idx = np.searchsorted(self.cumulative, u, side="right")
        return np.minimum(idx, self.support[-1])


def sample_from_distribution(dist: SamplingDistribution, rng, size=None):
    gen = rng if isinstance(rng, np.random.Generator) else as_source(rng).stream("estimator-sample", 0)
    out = dist.sample(gen, size)
    return int(out) if size is None else out


def importance_estimate(opts, probs) -> float:
    """(1/s) sum opt_j / prob_j."""
    opts = np.asarray(opts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if opts.shape != probs.shape or opts.ndim != 1 or opts.size == 0:
        raise UsageError("opts and probs must be equal-length, non-empty vectors")
    if np.any(probs <= 0):
        raise UsageError("sampling probabilities must be positive")
    return math.fsum((opts / probs).tolist()) / opts.size


class RejectionOutcome(NamedTuple):
    survivors: np.ndarray | None    # candidate positions of the first s accepted, None on Fail
    accepted: int
    M: float

    @property
    def failed(self) -> bool:
        return self.survivors is None


def rejection_sample(P_probs, Pp_probs, s: int, rng) -> RejectionOutcome:
    """Accept candidate i with probability P'(x_i) / (M P(x_i)), M the largest ratio.

    Returns the positions of the first s accepted candidates, or survivors=None
    (Fail) when fewer than s are accepted.
    """
    P_probs = np.asarray(P_probs, dtype=np.float64)
    Pp_probs = np.asarray(Pp_probs, dtype=np.float64)
    if P_probs.shape != Pp_probs.shape:
        raise UsageError("probability vectors differ in length")
    if np.any(P_probs <= 0):
        raise UsageError("candidates must have positive proposal probability")
    gen = rng if isinstance(rng, np.random.Generator) else as_source(rng).stream("estimator-accept", 0)
    ratio = Pp_probs / P_probs
    M = float(ratio.max()) if ratio.size else 0.0
    u = gen.random(ratio.size)
    accepted = np.flatnonzero(u < ratio / M) if M > 0 else np.empty(0, dtype=np.int64)
    if accepted.size < s:
        return RejectionOutcome(None, int(accepted.size), M)
    return RejectionOutcome(accepted[:s], int(accepted.size), M)


@dataclass
class EstimateReport:
    estimate: float | None
    epsilon: float
    q: int
    s: int
    accepted: int
    M: float
    failed: bool
    D_total: int
    D_prime: float
    seed: int
    profile: str = "paper"
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "estimate": self.estimate,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "profile": self.profile,
            "q": self.q,
            "s": self.s,
            "accepted": self.accepted,
            "failed": self.failed,
            "M": self.M,
            "D_total": self.D_total,
            "D_prime": self.D_prime,
        }
        if timings:
            out["elapsed_ms"] = {k: round(v * 1e3, 3) for k, v in self.timings.items()}
        return out


def chamfer_estimate(A: PointSet, B: PointSet, epsilon: float, q: int | None = None, rng=None,
                     profile: str = "paper", scale: float = DEFAULT_FAST_SCALE,
                     strict_regime: bool = False) -> EstimateReport:
    """(1 +- eps)-estimate of CH(A, B), or a report with failed=True."""
    rng = as_source(rng)
    if A.d != B.d:
        raise UsageError(f"dimension mismatch: {A.d} vs {B.d}")
    n = max(A.n, B.n)
    dims = DerivedScale.from_instance(n, A.d, max(A.alpha, B.alpha), epsilon, strict_regime)
    if profile == "paper":
        scale = 1.0
    s = survivor_count(epsilon)
    if q is None:
        q = candidate_count(dims.D_bar, epsilon, profile, scale)
    if q < 1:
        raise UsageError("q must be positive")
    timings: dict[str, float] = {}
    diag: dict = {"D_bar": dims.D_bar}

    tick = time.perf_counter()
    qt = quadtree_estimates(A, B, rng)
    D_a = qt.values
    D_total = sum(int(v) for v in D_a.tolist())
    timings["quadtree"] = time.perf_counter() - tick
    diag["sort"] = list(qt.sort_methods)

    def report(**kw) -> EstimateReport:
        base = dict(epsilon=epsilon, q=q, s=s, seed=rng.master_seed, profile=profile,
                    timings=timings, diagnostics=diag)
        base.update(kw)
        return EstimateReport(**base)

    if D_total == 0:
        # every D_a >= opt_a, so CH = 0 exactly
        return report(estimate=0.0, accepted=0, M=0.0, failed=False, D_total=0, D_prime=0.0)

    tick = time.perf_counter()
    dist = SamplingDistribution.from_weights(D_a.astype(np.float64))
    x = dist.sample(rng.stream("estimator-sample", 0), q)
    P_x = dist.weights[x] / dist.total
    timings["sample"] = time.perf_counter() - tick
    diag["support"] = int(dist.support.size)

    tick = time.perf_counter()
    params = TournamentParams.for_instance(q, B.n, profile, scale)
    tr = tournament_batch(A, B, params, rng, ids=x)
    Dp_x = np.asarray(tr.values, dtype=np.float64)
    weighted = Dp_x / P_x
    D_prime = math.fsum(weighted.tolist()) / q
    Pp_x = Dp_x / D_prime
    timings["tournament"] = time.perf_counter() - tick
    diag.update(r=params.r, w=params.w_effective, g=params.g, **tr.diagnostics)

    tick = time.perf_counter()
    rej = rejection_sample(P_x, Pp_x, s, rng.stream("estimator-accept", 0))
    timings["reject"] = time.perf_counter() - tick
    if rej.failed:
        return report(estimate=None, accepted=rej.accepted, M=rej.M, failed=True,
                      D_total=D_total, D_prime=D_prime)

    tick = time.perf_counter()
    chosen = x[rej.survivors]
    uniq, inverse = np.unique(chosen, return_inverse=True)
    _, opt_u = exact_nn_batch(A.coords[uniq], B)
    opts = np.asarray(opt_u, dtype=np.float64)[inverse.ravel()]
    estimate = importance_estimate(opts, Pp_x[rej.survivors])
    timings["exact"] = time.perf_counter() - tick
    diag["survivors"] = chosen
    return report(estimate=estimate, accepted=rej.accepted, M=rej.M, failed=False,
                  D_total=D_total, D_prime=D_prime)


@dataclass
class AmplifiedReport:
    estimate: float | None
    repeats: int
    runs: list
    retries: int
    failures: int

    @property
    def failed(self) -> bool:
        return self.estimate is None

    def to_dict(self, timings: bool = False) -> dict:
        first = self.runs[0]
        out = {
            "estimate": self.estimate,
            "epsilon": first.epsilon,
            "seed": first.seed,
            "profile": first.profile,
            "q": first.q,
            "s": first.s,
            "accepted": [r.accepted for r in self.runs],
            "failed": self.failed,
            "repeats": self.repeats,
            "retries": self.retries,
            "failures": self.failures,
            "runs": [r.estimate for r in self.runs],
        }
        if timings:
            total: dict[str, float] = {}
            for r in self.runs:
                for k, v in r.timings.items():
                    total[k] = total.get(k, 0.0) + v
            out["elapsed_ms"] = {k: round(v * 1e3, 3) for k, v in total.items()}
        return out


def amplified_estimate(A: PointSet, B: PointSet, epsilon: float, repeats: int = 5, rng=None,
                       max_retries: int = MAX_RETRIES, **kwargs) -> AmplifiedReport:
    """Median of ``repeats`` independent estimates; a failed run is re-seeded up to max_retries times."""
    if repeats < 1 or repeats % 2 == 0:
        raise UsageError(f"repeats must be a positive odd integer, got {repeats}")
    rng = as_source(rng)
    runs, values = [], []
    retries = failures = 0
    for i in range(repeats):
        for attempt in range(max_retries + 1):
            src = rng if i == 0 and attempt == 0 else rng.child("repeat", i).child("retry", attempt)
            rep = chamfer_estimate(A, B, epsilon, rng=src, **kwargs)
            runs.append(rep)
            if not rep.failed:
                values.append(rep.estimate)
                break
            retries += attempt < max_retries
        else:
            failures += 1
    estimate = statistics.median_low(values) if values else None
    return AmplifiedReport(estimate=estimate, repeats=repeats, runs=runs, retries=retries, failures=failures)


def project_1d(X: np.ndarray, v: np.ndarray) -> np.ndarray:
    # row-wise products summed per row: identical rows give bit-identical projections
    return (np.asarray(X, dtype=np.float64) * v).sum(axis=1)


def coarse_estimate(A: PointSet, B: PointSet, rng=None) -> float:
    """poly(n)-approximation of CH(A, B) from a single 1-D Cauchy projection."""
    if A.d != B.d:
        raise UsageError(f"dimension mismatch: {A.d} vs {B.d}")
    v = sample_cauchy(A.d, as_source(rng).stream("coarse-proj", 0))
    pa = project_1d(A.coords, v)
    pb = np.sort(project_1d(B.coords, v))
    # nearest projected b for each projected a: one of its neighbours in the merged order
    pos = np.searchsorted(pb, pa)
    left = np.abs(pa - pb[np.maximum(pos - 1, 0)])
    right = np.abs(pb[np.minimum(pos, pb.size - 1)] - pa)
    return math.fsum(np.minimum(left, right).tolist())
