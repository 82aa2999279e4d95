"""Group fairness measurements for binary predictions and a binary protected attribute.

Groups are indexed by the protected value ``z`` in {0, 1}.  For the UCI Adult
data 0 is Female and 1 is Male.  Predictions are thresholded with a strict
inequality, ``yhat > threshold``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import normal_cdf

GROUPS = (0, 1)


class EmptyGroupError(ValueError):
    """A rate was requested for a group (or label cell) with no examples."""


@dataclass
class GroupCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class GroupedConfusion:
    groups: dict[int, GroupCounts] = field(default_factory=lambda: {g: GroupCounts() for g in GROUPS})

    def __getitem__(self, g: int) -> GroupCounts:
        return self.groups[g]


def _arrays(*seqs):
    arrays = [np.asarray(s) for s in seqs]
    n = arrays[0].shape[0]
    for a in arrays[1:]:
        if a.shape[0] != n:
            raise ValueError(f"length mismatch: {[len(x) for x in arrays]}")
    return arrays


def confusion_by_group(yhat, y, z, threshold: float = 0.5) -> GroupedConfusion:
    yhat, y, z = _arrays(yhat, y, z)
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    pred = yhat > threshold
    y = y.astype(bool)
    out = GroupedConfusion()
    for g in GROUPS:
        m = z == g
        out.groups[g] = GroupCounts(
            tp=int(np.sum(pred & y & m)),
            fp=int(np.sum(pred & ~y & m)),
            tn=int(np.sum(~pred & ~y & m)),
            fn=int(np.sum(~pred & y & m)),
        )
    return out


def rates(c: GroupedConfusion) -> dict[int, tuple[float, float]]:
    """Per-group ``(fpr, fnr)``."""
    out = {}
    for g in GROUPS:
        k = c[g]
        if k.fp + k.tn == 0:
            raise EmptyGroupError(f"group {g}: false positive rate undefined (no negatives)")
        if k.fn + k.tp == 0:
            raise EmptyGroupError(f"group {g}: false negative rate undefined (no positives)")
        out[g] = (k.fp / (k.fp + k.tn), k.fn / (k.fn + k.tp))
    return out


def positive_rates(yhat, z, threshold: float = 0.5) -> dict[int, float]:
    yhat, z = _arrays(yhat, z)
    out = {}
    for g in GROUPS:
        m = z == g
        if not np.any(m):
            raise EmptyGroupError(f"group {g} has no examples")
        out[g] = float(np.mean(yhat[m] > threshold))
    return out


def demographic_parity_gap(yhat, z, threshold: float = 0.5) -> float:
    pr = positive_rates(yhat, z, threshold)
    return abs(pr[0] - pr[1])


def equalized_odds_gaps(yhat, y, z, threshold: float = 0.5) -> tuple[float, float]:
    """``(|FPR_0 - FPR_1|, |TPR_0 - TPR_1|)``."""
    yhat, y, z = _arrays(yhat, y, z)
    gaps = []
    for label in (0, 1):
        rate = {}
        for g in GROUPS:
            m = (y == label) & (z == g)
            if not np.any(m):
                raise EmptyGroupError(f"cell y={label}, z={g} has no examples")
            rate[g] = float(np.mean(yhat[m] > threshold))
        gaps.append(abs(rate[0] - rate[1]))
    return gaps[0], gaps[1]


def two_proportion_ztest(k1: int, n1: int, k2: int, n2: int) -> float:
    """Two-sided p-value of the pooled two-proportion z-test."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("sample sizes must be positive")
    if not (0 <= k1 <= n1 and 0 <= k2 <= n2):
        raise ValueError("counts must satisfy 0 <= k <= n")
    pooled = (k1 + k2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return 1.0
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    zstat = (k1 / n1 - k2 / n2) / se
    return min(1.0, 2.0 * (1.0 - normal_cdf(abs(zstat))))


@dataclass
class EntropyEstimate:
    h_z: float
    h_z_given_y: float | None = None


def _plugin_entropy(z) -> float:
    _, counts = np.unique(z, return_counts=True)
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def empirical_entropy(z, y=None) -> EntropyEstimate:
    """Plug-in entropies in nats."""
    z = np.asarray(z)
    if z.size == 0:
        raise ValueError("entropy of an empty sample is undefined")
    h_z = _plugin_entropy(z)
    if y is None:
        return EntropyEstimate(h_z)
    y, z = _arrays(y, z)
    h_cond = 0.0
    for label in np.unique(y):
        m = y == label
        h_cond += m.mean() * _plugin_entropy(z[m])
    return EntropyEstimate(h_z, float(h_cond))


@dataclass
class GroupReport:
    fpr: float
    fnr: float
    positive_rate: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class FairnessReport:
    accuracy: float
    groups: dict[int, GroupReport]
    dp_gap: float
    eo_gap_y0: float
    eo_gap_y1: float
    p_value_y0: float
    p_value_y1: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = {str(g): d["groups"][g] for g in sorted(d["groups"])}
        return d


def fairness_report(yhat, y, z, threshold: float = 0.5) -> FairnessReport:
    yhat, y, z = _arrays(yhat, y, z)
    conf = confusion_by_group(yhat, y, z, threshold)
    fr = rates(conf)
    pos = positive_rates(yhat, z, threshold)
    groups = {}
    for g in GROUPS:
        k = conf[g]
        groups[g] = GroupReport(fpr=fr[g][0], fnr=fr[g][1], positive_rate=pos[g],
                                tp=k.tp, fp=k.fp, tn=k.tn, fn=k.fn)
    f, m = conf[0], conf[1]
    return FairnessReport(
        accuracy=float(np.mean((yhat > threshold) == y.astype(bool))),
        groups=groups,
        dp_gap=abs(pos[0] - pos[1]),
        eo_gap_y0=abs(fr[0][0] - fr[1][0]),
        eo_gap_y1=abs(fr[0][1] - fr[1][1]),
        p_value_y0=two_proportion_ztest(f.fp, f.fp + f.tn, m.fp, m.fp + m.tn),
        p_value_y1=two_proportion_ztest(f.fn, f.fn + f.tp, m.fn, m.fn + m.tp),
    )


def format_confusion_table(without: GroupedConfusion, with_: GroupedConfusion,
                           names=("Female", "Male")) -> str:
    """Side-by-side confusion matrices (rows: true label, columns: prediction)."""
    header = f"{'Without Debiasing':^30}|{'With Debiasing':^30}"
    lines = [header, "-" * len(header)]
    for g, name in zip(GROUPS, names):
        lines.append(f"{name:<10}{'Pred 0':>10}{'Pred 1':>10}|{name:<10}{'Pred 0':>10}{'Pred 1':>10}")
        for label in (0, 1):
            a, b = without[g], with_[g]
            left = (a.tn, a.fp) if label == 0 else (a.fn, a.tp)
            right = (b.tn, b.fp) if label == 0 else (b.fn, b.tp)
            lines.append(f"{'True ' + str(label):<10}{left[0]:>10}{left[1]:>10}|"
                         f"{'True ' + str(label):<10}{right[0]:>10}{right[1]:>10}")
    return "\n".join(lines)
