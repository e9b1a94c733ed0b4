"""Pinned-seed self-checks of the bit machinery and the statistical guarantees.

Each suite compares against a naive oracle or a probability bound and returns
a SuiteResult; thresholds carry a 3-standard-error allowance where the check
is statistical. Sizes are kept small so the full run takes seconds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bitops, quadtree
from .core import PointSet, RandomSource, RegimeWarning, distortion, exact_chamfer, exact_nn_batch
from .estimator import chamfer_estimate, coarse_estimate
from .synth import clustered_pair, uniform_pair
from .tournament import TournamentParams, median_abs_diff, sample_cauchy, tournament_batch

SEED = 20240101


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def binomial_se(p: float, n: int) -> float:
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1 - p) / n)


# ---------------------------------------------------------------- naive oracles

def naive_transpose(bits: np.ndarray, w: int) -> np.ndarray:
    out = np.empty_like(bits)
    I, J = bits.shape[-2:]
    for i in range(I):
        for j in range(J):
            bi, bj = i // w * w, j // w * w
            out[..., i, j] = bits[..., bi + (j - bj), bj + (i - bi)]
    return out


def naive_concatenate(bits: np.ndarray, w: int) -> np.ndarray:
    I, J = bits.shape[-2:]
    blocks = [bits[..., u % I, w * (u // I): w * (u // I) + w] for u in range(I * J // w)]
    return np.concatenate(blocks, axis=-1)


def naive_key_bits(h: np.ndarray, t: int) -> np.ndarray:
    d = h.shape[-1]
    dp, tp = bitops.padded_dims(d, t)
    out = np.zeros(h.shape[:-1] + (dp * tp,), dtype=np.uint8)
    for j in range(tp):
        for i in range(d):
            out[..., j * dp + (dp - d) + i] = (h[..., i] >> np.uint64(tp - 1 - j)) & np.uint64(1)
    return out


def naive_lcp(a: np.ndarray, b: np.ndarray) -> int:
    for i, (x, y) in enumerate(zip(a.tolist(), b.tolist())):
        if x != y:
            return i
    return len(a)


# ---------------------------------------------------------------- suites

def suite_transpose(seed: int = SEED) -> SuiteResult:
    gen = np.random.default_rng(seed)
    bad = checked = 0
    for I, J in [(2, 2), (8, 8), (8, 32), (64, 64), (16, 128)]:
        for w in [v for v in (2, 4, 8, 16, 64) if v <= I]:
            bits = gen.integers(0, 2, size=(20, I, J), dtype=np.uint8)
            got = bitops.transpose_blocks(bitops.BitMatrix.from_bits(bits), w).to_bits()
            bad += int((got != naive_transpose(bits, w)).any(axis=(1, 2)).sum())
            checked += 20
    return SuiteResult("transpose", bad == 0, f"{checked - bad}/{checked} matrices match per-bit oracle")


def suite_bitops(seed: int = SEED) -> SuiteResult:
    gen = np.random.default_rng(seed)
    bad = checked = 0
    for I, J in [(1, 16), (2, 8), (4, 64), (8, 256)]:
        for w in [v for v in (1, 2, 4, 8, 16, 64) if I <= v <= J]:
            bits = gen.integers(0, 2, size=(10, I, J), dtype=np.uint8)
            words = bitops.concatenate_rows(bitops.BitMatrix.from_bits(bits), w)
            bad += int((bitops.unpack_bits(words, I * J) != naive_concatenate(bits, w)).any(axis=1).sum())
            checked += 10
    for d in (1, 2, 3, 8, 20, 64):
        for t in (2, 5, 16, 32):
            h = gen.integers(0, 1 << t, size=(10, d), dtype=np.uint64)
            key = bitops.encode_key(h, t)
            bad += int((bitops.unpack_bits(key.words, key.length_bits) != naive_key_bits(h, t)).any(axis=1).sum())
            checked += 10
    for length in (5, 64, 130):
        for _ in range(30):
            a = gen.integers(0, 2, size=length, dtype=np.uint8)
            b = a.copy()
            b[gen.integers(0, length):] = gen.integers(0, 2, size=1, dtype=np.uint8)[0] ^ 1
            ka = bitops.TransposedKey(bitops.pack_bits(a), length)
            kb = bitops.TransposedKey(bitops.pack_bits(b), length)
            bad += bitops.lcp_bits(ka, kb) != naive_lcp(a, b)
            checked += 1
    return SuiteResult("bitops", bad == 0, f"{checked - bad}/{checked} concatenate/encode/lcp cases match")


def prefix_mismatches(d: int, t: int) -> tuple[int, int]:
    """Exhaustive check that equal level-k cells coincide with key LCP >= d'(t'-k).

    Points range over [0, 2^(t-1))^d and shifts over [0, 2^(t-1))^d; returns
    (mismatching (pair, shift, k) triples, triples checked).
    """
    side = 1 << (t - 1)
    grid = np.stack(np.meshgrid(*[np.arange(side)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    dp, tp = bitops.padded_dims(d, t)
    bad = checked = 0
    for z in grid:
        shift = quadtree.GridShift(z, t)
        key = bitops.encode_key(quadtree.hash_point(grid, shift), t)
        lcp = bitops.lcp_words(key.words[:, None, :], key.words[None, :, :], key.length_bits)
        for k in range(t + 1):
            cell = quadtree.h_k(grid, shift, k)
            same = (cell[:, None, :] == cell[None, :, :]).all(axis=2)
            bad += int((same != (lcp >= dp * (tp - k))).sum())
            checked += same.size
    return bad, checked


def suite_prefix(seed: int = SEED) -> SuiteResult:
    bad, checked = prefix_mismatches(2, 3)
    return SuiteResult("prefix", bad == 0, f"{checked - bad}/{checked} (pair, shift, level) cases agree")


def lsh_rates(delta: np.ndarray, k: int, t: int, trials: int, gen: np.random.Generator) -> tuple[float, float]:
    """Empirical (separation, collision) rates of h_k for points 0 and delta."""
    d = delta.size
    z = gen.integers(0, 1 << (t - 1), size=(trials, d), dtype=np.int64)
    hq = z >> k
    hp = (z + delta) >> k
    coll = (hq == hp).all(axis=1).mean()
    return 1.0 - coll, coll


def suite_lsh(seed: int = SEED) -> SuiteResult:
    gen = np.random.default_rng(seed)
    trials, t, bad = 4000, 16, []
    for d, k, total in [(1, 4, 4), (4, 6, 32), (8, 5, 100), (2, 3, 2)]:
        delta = np.zeros(d, dtype=np.int64)
        np.add.at(delta, gen.integers(0, d, size=total), 1)
        sep, coll = lsh_rates(delta, k, t, trials, gen)
        ratio = total / 2**k
        b_sep, b_coll = min(1.0, ratio), math.exp(-ratio)
        if sep > b_sep + 3 * binomial_se(b_sep, trials) or coll > b_coll + 3 * binomial_se(b_coll, trials):
            bad.append((d, k, total))
    return SuiteResult("lsh", not bad, "all separation/collision rates within bounds" if not bad else f"violations {bad}")


def median_outside_rate(r: int, c: float, trials: int, d: int, gen: np.random.Generator) -> float:
    out = 0
    for _ in range(trials):
        x = gen.integers(0, 1000, size=d)
        y = gen.integers(0, 1000, size=d)
        dist = float(np.abs(x - y).sum())
        v = sample_cauchy((r, d), gen)
        m = median_abs_diff(v @ x, v @ y)
        out += not (1 - c) * dist < m < (1 + c) * dist
    return out / trials


def suite_median(seed: int = SEED) -> SuiteResult:
    gen = np.random.default_rng(seed)
    r, c, trials = 4000, 0.25, 150
    rate = median_outside_rate(r, c, trials, 8, gen)
    bound = 2 * math.exp(-r * c * c / 50)
    ok = rate <= bound + 3 * binomial_se(bound, trials)
    return SuiteResult("median", ok, f"outside rate {rate:.4f} vs bound {bound:.4f}")


def suite_quadtree(seed: int = SEED) -> SuiteResult:
    A, B, opt = clustered_pair(256, 8, 1 << 16, seed)
    runs = 60
    vals = np.empty((runs, A.n))
    sound = True
    for s in range(runs):
        est = quadtree.quadtree_estimates(A, B, RandomSource(seed + s))
        sound &= bool((est.values >= opt).all())
        vals[s] = est.values
    bound = 5 * distortion(max(A.n, B.n), A.d) * opt
    mean, se = vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(runs)
    ok = sound and bool((mean <= bound + 3 * se).all())
    return SuiteResult("quadtree", ok, f"sound={sound}, worst mean/bound {np.max(mean / np.maximum(bound, 1)):.3f}")


def suite_tournament(seed: int = SEED) -> SuiteResult:
    A, B = uniform_pair(40, 256, 16, 1 << 12, seed)
    _, opt = exact_nn_batch(A, B)
    paper = TournamentParams.for_instance(40, B.n)
    # projection branch alone: drop the uniform sample so the cap cannot hide it
    params = TournamentParams(t=40, r=paper.r, w=0, g=paper.g, n=B.n)
    runs, good, sound = 6, 0, True
    for s in range(runs):
        res = tournament_batch(A, B, params, RandomSource(seed + s))
        sound &= bool((res.values >= opt).all())
        good += bool((res.values <= 2 * opt).all())
    ok = sound and good >= 0.9 * runs - 3 * runs * binomial_se(0.9, runs)
    return SuiteResult("tournament", ok, f"sound={sound}, all-within-2x in {good}/{runs} runs")


def survivor_marginals(A: PointSet, B: PointSet, epsilon: float, runs: int, seed: int) -> np.ndarray:
    """Empirical survivor frequency per point of A, pooled over pipeline runs (exact tournament)."""
    from . import estimator

    counts = np.zeros(A.n)
    for s in range(runs):
        rng = RandomSource(seed, (s,))
        qt = quadtree.quadtree_estimates(A, B, rng)
        dist = estimator.SamplingDistribution.from_weights(qt.values.astype(np.float64))
        q = 10 * estimator.survivor_count(epsilon)
        x = dist.sample(rng.stream("estimator-sample", 0), q)
        P_x = dist.weights[x] / dist.total
        _, opt = exact_nn_batch(A.coords[x], B)
        Dp = opt.astype(np.float64)
        Pp = Dp / (np.sum(Dp / P_x) / q)
        rej = estimator.rejection_sample(P_x, Pp, estimator.survivor_count(epsilon),
                                         rng.stream("estimator-accept", 0))
        if not rej.failed:
            np.add.at(counts, x[rej.survivors], 1)
    return counts


def suite_rejection(seed: int = SEED) -> SuiteResult:
    gen = np.random.default_rng(seed)
    B = PointSet(gen.integers(0, 64, size=(8, 3)), 64)
    A = PointSet(gen.integers(0, 64, size=(8, 3)), 64)
    _, opt = exact_nn_batch(A, B)
    ch = float(opt.sum())
    counts = survivor_marginals(A, B, 0.5, 100, seed)
    N = counts.sum()
    freq = counts / N
    floor = opt / (2 * ch)
    ok = bool(np.all(freq >= floor - 3 * np.sqrt(floor * (1 - floor) / N)))
    return SuiteResult("rejection", ok, f"{int(N)} survivors, min freq - floor {np.min(freq - floor):+.4f}")


def suite_endtoend(seed: int = SEED) -> SuiteResult:
    A, B = uniform_pair(200, 200, 8, 1 << 12, seed)
    ch = exact_chamfer(A, B)
    runs, good = 6, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        for s in range(runs):
            rep = chamfer_estimate(A, B, 0.25, rng=RandomSource(seed + s))
            good += (not rep.failed) and abs(rep.estimate - ch) <= 0.25 * ch
    return SuiteResult("endtoend", good >= runs / 2, f"{good}/{runs} runs within 1 +- eps")


def suite_coarse(seed: int = SEED) -> SuiteResult:
    n, trials, inside = 64, 40, 0
    for s in range(trials):
        A, B = uniform_pair(n, n, 8, 1 << 12, seed + s)
        ratio = coarse_estimate(A, B, RandomSource(seed + s)) / exact_chamfer(A, B)
        inside += n**-3 <= ratio <= n**3
    zero = coarse_estimate(A, A, RandomSource(seed)) == 0.0
    return SuiteResult("coarse", zero and inside >= 0.9 * trials, f"{inside}/{trials} within [n^-3, n^3], A=A gives 0: {zero}")


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "transpose": suite_transpose,
    "bitops": suite_bitops,
    "prefix": suite_prefix,
    "lsh": suite_lsh,
    "median": suite_median,
    "quadtree": suite_quadtree,
    "tournament": suite_tournament,
    "rejection": suite_rejection,
    "endtoend": suite_endtoend,
    "coarse": suite_coarse,
}


def run_suites(names=None, seed: int = SEED) -> list[SuiteResult]:
    names = list(names) if names else list(SUITES)
    out = []
    for name in names:
        try:
            out.append(SUITES[name](seed))
        except Exception as exc:  # a crashing suite is a failing suite
            out.append(SuiteResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return out
