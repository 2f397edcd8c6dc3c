"""AUC (overall and per subgroup) and the Skew fairness metric."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .domain import Dataset, SubgroupKey, partition_by_subgroup
from .errors import ConfigError, DegenerateLabels, ShapeMismatch

RATE_KINDS = ("fpr", "fnr", "auc-complement")


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half.

    Uses midranks so the cost is one sort.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ShapeMismatch("scores and labels differ in length")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = s.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs at least one positive and one negative label")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_columns(scores, labels) -> np.ndarray:
    """AUC of each column of an (m, c) score matrix against shared labels."""
    S = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).reshape(-1)
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs at least one positive and one negative label")
    ranks = rankdata(S, axis=0)
    return (ranks[pos].sum(axis=0) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class MetricConfig:
    rate_kind: str = "fpr"
    threshold: float = 0.5
    smoothing: float = 1e-6

    def __post_init__(self):
        if self.rate_kind not in RATE_KINDS:
            raise ConfigError(f"rate_kind must be one of {RATE_KINDS}, got {self.rate_kind!r}")
        if not 0 <= self.threshold <= 1:
            raise ConfigError("threshold must lie in [0, 1]")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")


def subgroup_rates(scores, labels, groups: Sequence[SubgroupKey], kind: str = "fpr",
                   threshold: float = 0.5) -> dict[SubgroupKey, float]:
    """Per-group error rate.

    ``fpr``: share of real (label 0) samples scored above ``threshold``.
    ``fnr``: share of fake (label 1) samples scored at or below it.
    ``auc-complement``: 1 - group AUC.
    Groups for which the rate is undefined are left out.
    """
    if kind not in RATE_KINDS:
        raise ConfigError(f"unknown rate kind {kind!r}")
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if len(groups) != s.shape[0] or y.shape[0] != s.shape[0]:
        raise ShapeMismatch("scores, labels and groups must be aligned")
    buckets: dict[SubgroupKey, list[int]] = {}
    for i, g in enumerate(groups):
        buckets.setdefault(SubgroupKey(g), []).append(i)
    rates = {}
    for key in sorted(buckets):
        idx = np.asarray(buckets[key])
        gs, gy = s[idx], y[idx]
        if kind == "fpr":
            neg = gy == 0
            if neg.any():
                rates[key] = float(np.mean(gs[neg] > threshold))
        elif kind == "fnr":
            pos = gy == 1
            if pos.any():
                rates[key] = float(np.mean(gs[pos] <= threshold))
        else:
            rates[key] = 1.0 - auc(gs, gy)
    return rates


def skew(rates: dict, smoothing: float = 1e-6) -> float:
    """log((max rate + eps) / (min rate + eps)); 0 when all groups are equal."""
    if not rates:
        raise ValueError("skew needs at least one group rate")
    vals = list(rates.values())
    if min(vals) < 0:
        raise ValueError("rates must be non-negative")
    hi, lo = max(vals) + smoothing, min(vals) + smoothing
    if hi == lo:
        return 0.0
    return math.log(hi / lo)


@dataclass
class MetricReport:
    auc_overall: float
    auc_by_group: dict = field(default_factory=dict)
    rate_by_group: dict = field(default_factory=dict)
    skew: float = 0.0
    n_by_group: dict = field(default_factory=dict)

    def to_json(self, schema=None) -> dict:
        def name(k):
            return schema.group_name(k) if schema is not None else "-".join(map(str, k))

        groups = sorted(self.n_by_group)
        return {
            "auc_overall": self.auc_overall,
            "skew": self.skew,
            "groups": [{"key": list(k), "name": name(k), "n": self.n_by_group[k],
                        "auc": self.auc_by_group.get(k), "rate": self.rate_by_group.get(k)}
                       for k in groups],
        }


def evaluate(ds: Dataset, scores, config: MetricConfig | None = None) -> MetricReport:
    config = config or MetricConfig()
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[0] != len(ds):
        raise ShapeMismatch("scores not aligned with dataset")
    keys = ds.keys
    buckets = partition_by_subgroup(ds)
    auc_by_group = {}
    for key, idx in buckets.items():
        gy = ds.labels[idx]
        if gy.min() != gy.max():
            auc_by_group[key] = auc(s[idx], gy)
    rates = subgroup_rates(s, ds.labels, keys, config.rate_kind, config.threshold) \
        if config.rate_kind != "auc-complement" else {k: 1.0 - v for k, v in auc_by_group.items()}
    return MetricReport(
        auc_overall=auc(s, ds.labels),
        auc_by_group=auc_by_group,
        rate_by_group=rates,
        skew=skew(rates, config.smoothing) if rates else 0.0,
        n_by_group={k: int(len(v)) for k, v in buckets.items()},
    )
