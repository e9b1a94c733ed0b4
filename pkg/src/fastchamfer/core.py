"""Integer point sets, the l1 metric, exact oracles and seeded randomness."""

from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import dataclass, field

import numpy as np

MAX_COORD = 2**63 - 1

# Budget (in int64 elements) for one block of a pairwise distance computation.
_BLOCK_ELEMS = 1 << 22


class UsageError(ValueError):
    """Raised when an operation is called with arguments outside its contract."""


class RegimeWarning(UserWarning):
    """epsilon is below the log^2 n / sqrt(n) regime the guarantees are stated for."""


def next_pow2(x: int) -> int:
    x = int(x)
    return 1 if x <= 1 else 1 << (x - 1).bit_length()


def is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True, eq=False)
class PointSet:
    """An immutable n x d matrix of non-negative integer coordinates.

    ``alpha`` is the coordinate bound: a power of two with every coordinate
    strictly below it. When not given (or not a power of two) it is rounded up.
    """

    coords: np.ndarray
    alpha: int = 0

    def __init__(self, coords, alpha: int | None = None):
        arr = np.asarray(coords)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 1)
        if arr.ndim != 2:
            raise UsageError(f"point set must be 2-dimensional, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise UsageError("point set needs n >= 1 points of dimension d >= 1")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or not np.all(arr == np.floor(arr)):
                raise UsageError("coordinates must be integers")
        elif arr.dtype.kind not in "iuO":
            raise UsageError(f"unsupported coordinate dtype {arr.dtype}")
        if arr.dtype.kind == "O":
            vals = [int(v) for v in arr.ravel()]
            lo, hi = min(vals), max(vals)
        else:
            lo, hi = int(arr.min()), int(arr.max())
        if lo < 0:
            raise UsageError("coordinates must be non-negative")
        if hi > MAX_COORD:
            raise UsageError("coordinates must be below 2**63")
        data = np.array(arr, dtype=np.int64)
        data.setflags(write=False)
        bound = max(2, hi + 1, int(alpha or 0))
        object.__setattr__(self, "coords", data)
        object.__setattr__(self, "alpha", next_pow2(bound))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self.coords[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.coords, other.coords)

    __hash__ = None

    @property
    def wide(self) -> bool:
        """True when an l1 distance could overflow int64."""
        return self.d * (self.alpha - 1) > MAX_COORD

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, d={self.d}, alpha={self.alpha})"


def _check_dims(d1: int, d2: int) -> None:
    if d1 != d2:
        raise UsageError(f"dimension mismatch: {d1} vs {d2}")


def l1_distance(p, q) -> int:
    """Exact l1 distance between two points, as a Python int."""
    p = np.asarray(p).ravel()
    q = np.asarray(q).ravel()
    _check_dims(p.size, q.size)
    return sum(abs(int(a) - int(b)) for a, b in zip(p.tolist(), q.tolist()))


def l1_rows(X: np.ndarray, Y: np.ndarray, wide: bool = False) -> np.ndarray:
    """Row-wise l1 distances between equally shaped (..., d) integer arrays."""
    diff = np.abs(np.asarray(X, dtype=np.int64) - np.asarray(Y, dtype=np.int64))
    if wide:
        return diff.astype(object).sum(axis=-1)
    return diff.sum(axis=-1)


def _pair_block(Q: np.ndarray, P: np.ndarray, wide: bool) -> np.ndarray:
    return l1_rows(Q[:, None, :], P[None, :, :], wide)


def exact_nn_batch(Q, P: PointSet) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest neighbours in P for every row of Q.

    Returns (index, distance) arrays; ties go to the smallest P index.
    """
    Qc = Q.coords if isinstance(Q, PointSet) else np.asarray(Q, dtype=np.int64).reshape(-1, P.d)
    _check_dims(Qc.shape[1], P.d)
    wide = P.wide or (isinstance(Q, PointSet) and Q.wide)
    if not wide and Qc.size and int(Qc.max()) >= P.alpha:
        wide = P.d * (max(P.alpha, int(Qc.max()) + 1) - 1) > MAX_COORD
    m = Qc.shape[0]
    idx = np.empty(m, dtype=np.int64)
    dist = np.empty(m, dtype=object if wide else np.int64)
    step = max(1, _BLOCK_ELEMS // max(1, P.n * P.d))
    for lo in range(0, m, step):
        block = _pair_block(Qc[lo:lo + step], P.coords, wide)
        j = np.argmin(block, axis=1)
        idx[lo:lo + step] = j
        dist[lo:lo + step] = block[np.arange(block.shape[0]), j]
    return idx, dist


def exact_nn(q, P: PointSet) -> tuple[int, int]:
    """Nearest neighbour of a single point q in P: (index, distance)."""
    if not isinstance(P, PointSet):
        raise UsageError("P must be a PointSet")
    q = np.asarray(q).ravel()
    _check_dims(q.size, P.d)
    idx, dist = exact_nn_batch(q.reshape(1, -1), P)
    return int(idx[0]), int(dist[0])


def exact_chamfer(A: PointSet, B: PointSet) -> int:
    """CH(A, B): the sum over a in A of the l1 distance to its nearest b in B."""
    _check_dims(A.d, B.d)
    _, dist = exact_nn_batch(A, B)
    return sum(int(v) for v in dist.tolist())


def _label_id(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


@dataclass(frozen=True)
class RandomSource:
    """Reproducible randomness keyed by (stage label, index).

    Every ``stream(label, i)`` call builds a fresh PCG64 generator from a
    SeedSequence whose spawn key encodes the path of labels, so the values a
    stage sees never depend on how much randomness other stages consumed.
    """

    master_seed: int
    path: tuple[int, ...] = field(default=())

    def _key(self, label: str, index: int) -> tuple[int, ...]:
        return self.path + (_label_id(label), int(index))

    def stream(self, label: str, index: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed & (2**64 - 1), spawn_key=self._key(label, index))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, label: str, index: int = 0) -> RandomSource:
        return RandomSource(self.master_seed, self._key(label, index))


def as_source(rng) -> RandomSource:
    if isinstance(rng, RandomSource):
        return rng
    if rng is None:
        return RandomSource(0)
    return RandomSource(int(rng))


@dataclass(frozen=True)
class DerivedScale:
    D_bar: float
    epsilon: float
    t_levels: int

    @classmethod
    def from_instance(cls, n: int, d: int, alpha: int, epsilon: float, strict: bool = False) -> DerivedScale:
        if not 0.0 < epsilon < 1.0:
            raise UsageError(f"epsilon must lie in (0, 1), got {epsilon}")
        check_regime(n, epsilon, strict)
        return cls(D_bar=distortion(n, d), epsilon=epsilon, t_levels=levels(alpha))


def distortion(n: int, d: int) -> float:
    """min(d, 3 log2 n), floored at 1."""
    return max(1.0, min(float(d), 3.0 * math.log2(max(n, 1))))


def levels(alpha: int) -> int:
    """t = ceil(log2 alpha) + 1."""
    return max(2, (int(alpha) - 1).bit_length() + 1)


def check_regime(n: int, epsilon: float, strict: bool = False) -> bool:
    """Whether epsilon >= log2(n)^2 / sqrt(n); warns (or raises when strict) otherwise."""
    floor = math.log2(max(n, 2)) ** 2 / math.sqrt(max(n, 1))
    if epsilon >= floor:
        return True
    msg = f"epsilon={epsilon} is below log^2 n / sqrt n = {floor:.4g} for n={n}"
    if strict:
        raise UsageError(msg)
    warnings.warn(msg, RegimeWarning, stacklevel=3)
    return False
