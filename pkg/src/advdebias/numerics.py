"""Small dense/sparse vector helpers, seeded sampling, PCA and the normal CDF."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Below this squared norm a projection target is treated as the zero vector.
PROJECTION_EPS = 1e-12

#: Relative eigenvalue cutoff used to decide the numerical rank in PCA.
RANK_RTOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class RankError(ValueError):
    """Input does not have enough independent directions for the request."""

    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


@dataclass(frozen=True)
class SparseFeatures:
    """Sparse vector stored as strictly increasing ``indices`` and ``values``."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise DimensionError("indices and values must be 1-d and equally long")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.dim or np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing and inside [0, dim)")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, float]], dim: int) -> "SparseFeatures":
        pairs = sorted(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=np.int64),
                   np.array([p[1] for p in pairs], dtype=np.float64), dim)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __len__(self) -> int:
        return self.dim


def dot(a, b) -> float:
    """Inner product of a dense or sparse vector with a dense vector."""
    b = np.asarray(b, dtype=np.float64)
    if isinstance(a, SparseFeatures):
        if a.dim != b.shape[0]:
            raise DimensionError(f"dimension mismatch: {a.dim} vs {b.shape[0]}")
        return float(np.dot(a.values, b[a.indices]))
    a = np.asarray(a, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def project(x, v) -> np.ndarray:
    """Projection of ``x`` onto the line spanned by ``v``.

    Returns the zero vector when ``v`` is (numerically) zero.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if x.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {v.shape}")
    vv = float(np.dot(v, v))
    if vv < PROJECTION_EPS:
        return np.zeros_like(x)
    return (float(np.dot(x, v)) / vv) * v


class SeededRng:
    """Deterministic random stream (PCG64) owned by a single caller."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.path: tuple[int, ...] = ()
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, mean=0.0, stddev=1.0, size=None):
        return self.generator.normal(mean, stddev, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def spawn(self, key: int) -> "SeededRng":
        """Independent child stream derived from this stream's seed and ``key``."""
        path = self.path + (int(key),)
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *path])
        child = SeededRng.__new__(SeededRng)
        child.seed = self.seed
        child.path = path
        child.generator = np.random.Generator(np.random.PCG64(ss))
        return child


def sample_normal(rng: SeededRng, mean: float, stddev: float) -> float:
    if stddev < 0:
        raise ValueError(f"stddev must be nonnegative, got {stddev}")
    if stddev == 0:
        return float(mean)
    return float(rng.normal(mean, stddev))


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def top_principal_components(rows, k: int) -> list[np.ndarray]:
    """Top-``k`` principal directions of ``rows`` (mean-centred).

    Components are unit norm, ordered by decreasing variance, and signed so
    that their largest-magnitude entry is positive.
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("rows must form a 2-d array")
    n, d = X.shape
    if k < 1 or k > min(n, d):
        raise ValueError(f"k={k} out of range for {n} rows of dimension {d}")
    Xc = X - X.mean(axis=0)
    # thin SVD works on whichever of the n x n / d x d problems is smaller
    _, sing, vt = np.linalg.svd(Xc, full_matrices=False)
    variances = sing ** 2 / max(n - 1, 1)
    scale = max(float(np.abs(X).max()) ** 2, 1.0)
    rank = int(np.sum(variances > RANK_RTOL * scale))
    if rank < k:
        raise RankError(f"requested {k} components but the centred rows have rank {rank}", rank)
    comps = []
    for vec in vt[:k]:
        vec = vec / np.linalg.norm(vec)
        if vec[np.argmax(np.abs(vec))] < 0:
            vec = -vec
        comps.append(vec)
    return comps
