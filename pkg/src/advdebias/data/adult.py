"""UCI Adult (census income) loading and feature encoding."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..numerics import SparseFeatures
from .examples import ExampleSet

COLUMNS = (
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "sex", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
)
CATEGORICAL = ("workclass", "education", "marital_status", "occupation", "relationship",
               "race", "sex", "native_country")
CONTINUOUS = ("education_num", "capital_gain", "capital_loss", "hours_per_week")
AGE_BOUNDARIES = (18, 25, 30, 35, 40, 45, 50, 55, 60, 65)
UNKNOWN = "<unk>"


class AdultFormatError(ValueError):
    pass


def read_adult_file(path) -> list[dict[str, str]]:
    """Parse one comma-separated Adult file into dicts of trimmed strings.

    Blank lines and the ``|1x3 Cross validator`` banner of the test split are
    skipped; the trailing period on test labels is removed.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(COLUMNS):
                raise AdultFormatError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(fields)}")
            rec = dict(zip(COLUMNS, fields))
            rec["income"] = rec["income"].rstrip(".")
            records.append(rec)
    return records


def load_adult(train_path, test_path) -> tuple[list[dict], list[dict]]:
    for p in (train_path, test_path):
        if not Path(p).is_file():
            raise FileNotFoundError(f"Adult data file not found: {p}")
    return read_adult_file(train_path), read_adult_file(test_path)


def age_bucket(age: float) -> int:
    """Index of the left-closed age interval; 0 is below 18, 10 is 65 and over."""
    return bisect.bisect_right(AGE_BOUNDARIES, age)


@dataclass
class AdultCodec:
    """Maps Adult records to feature vectors.

    Layout: 11 age buckets, then one block per categorical column (its
    training vocabulary in sorted order followed by a reserved ``<unk>``
    slot), then the standardized continuous columns.  ``fnlwgt`` is dropped.
    """

    vocab: dict[str, dict[str, int]] = field(default_factory=dict)
    offsets: dict[str, int] = field(default_factory=dict)
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    dim: int = 0

    @property
    def fitted(self) -> bool:
        return self.dim > 0

    def fit(self, records) -> "AdultCodec":
        offset = len(AGE_BOUNDARIES) + 1
        for col in CATEGORICAL:
            values = sorted({r[col] for r in records})
            self.vocab[col] = {v: i for i, v in enumerate(values + [UNKNOWN])}
            self.offsets[col] = offset
            offset += len(self.vocab[col])
        for col in CONTINUOUS:
            vals = np.array([float(r[col]) for r in records])
            self.mean[col] = float(vals.mean()) if vals.size else 0.0
            sd = float(vals.std()) if vals.size else 1.0
            self.std[col] = sd if sd > 0 else 1.0
            self.offsets[col] = offset
            offset += 1
        self.dim = offset
        return self

    def feature_names(self) -> list[str]:
        names = [f"age_bucket_{i}" for i in range(len(AGE_BOUNDARIES) + 1)]
        for col in CATEGORICAL:
            names += [f"{col}={v}" for v in self.vocab[col]]
        names += list(CONTINUOUS)
        return names

    def transform_record(self, rec) -> SparseFeatures:
        if not self.fitted:
            raise RuntimeError("AdultCodec must be fitted before transforming records")
        pairs = [(age_bucket(float(rec["age"])), 1.0)]
        for col in CATEGORICAL:
            vocab = self.vocab[col]
            pairs.append((self.offsets[col] + vocab.get(rec[col], vocab[UNKNOWN]), 1.0))
        for col in CONTINUOUS:
            pairs.append((self.offsets[col], (float(rec[col]) - self.mean[col]) / self.std[col]))
        return SparseFeatures.from_pairs(pairs, self.dim)

    def decode_category(self, x, col: str) -> str:
        """Recover the categorical value of ``col`` from an encoded dense row."""
        block = np.asarray(x)[self.offsets[col]:self.offsets[col] + len(self.vocab[col])]
        inverse = {i: v for v, i in self.vocab[col].items()}
        return inverse[int(np.argmax(block))]


def label_of(rec) -> float:
    return 1.0 if rec["income"] == ">50K" else 0.0


def protected_of(rec) -> float:
    return 1.0 if rec["sex"] == "Male" else 0.0


def encode_features(records, codec: AdultCodec) -> ExampleSet:
    if not codec.fitted:
        raise RuntimeError("AdultCodec must be fitted before encoding")
    X = np.zeros((len(records), codec.dim))
    for i, rec in enumerate(records):
        sf = codec.transform_record(rec)
        X[i, sf.indices] = sf.values
    y = np.array([label_of(r) for r in records])
    z = np.array([protected_of(r) for r in records])
    return ExampleSet(X.reshape(len(records), codec.dim), y, z)
