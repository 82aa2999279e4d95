"""Synthetic data in which a protected bit leaks into a noisy feature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import SeededRng
from .examples import ExampleSet


@dataclass(frozen=True)
class ToyConfig:
    n: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")


def generate_toy(cfg: ToyConfig) -> ExampleSet:
    """Draw ``r ~ Bernoulli(1/2)``, ``v ~ N(r, 1)``, ``u, w ~ N(v, 1)``.

    Features are ``x = (r, u)``, the label is ``[w > 0]`` and the protected
    value is ``r``.
    """
    rng = SeededRng(cfg.seed)
    r = rng.integers(0, 2, size=cfg.n).astype(np.float64)
    v = rng.normal(r, 1.0)
    u = rng.normal(v, 1.0)
    w = rng.normal(v, 1.0)
    X = np.column_stack([r, u])
    return ExampleSet(X, (w > 0).astype(np.float64), r)
