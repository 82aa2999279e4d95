"""Containers for (x, y, z) training triples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: float | np.ndarray
    z: float


@dataclass
class ExampleSet:
    """Column-stacked examples.

    ``X`` has one row per example (for the analogy task each row is a
    ``(3, d)`` block), ``y`` holds labels or target vectors and ``z`` the
    protected value.  Indexing with an int yields a :class:`LabeledExample`;
    indexing with a slice, mask or index array yields another ``ExampleSet``.
    """

    X: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        n = self.X.shape[0]
        if self.y.shape[0] != n or self.z.shape[0] != n:
            raise ValueError("X, y and z must have the same number of rows")
        for name in ("X", "y", "z"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            y = self.y[idx]
            return LabeledExample(self.X[idx], y if np.ndim(y) else float(y), float(self.z[idx]))
        return ExampleSet(self.X[idx], self.y[idx], self.z[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_examples(cls, examples) -> "ExampleSet":
        examples = list(examples)
        return cls(np.array([e.x for e in examples]), np.array([e.y for e in examples]),
                   np.array([e.z for e in examples]))
