"""The do(F) intervention experiment on (DD, MC) strata.

F=0 trains with plain cross-entropy, F=1 with inverse-propensity reweighted
cross-entropy. Model capacity MC is emulated by encoder size presets. Every
(f, mc) cell is trained once from the same seed; outcomes are per-DD test AUCs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..domain import Dataset, SubgroupKey, partition_by_subgroup
from ..errors import ConfigError
from ..metrics import MetricConfig, auc_columns, evaluate
from ..model import TrainConfig, train
from .adjustment import AceReport, Stratum, ace, binarize_fairness, stratified_bootstrap

log = logging.getLogger(__name__)

CAPACITY_PRESETS = {
    "small": dict(hidden=(16, 16), d_h=8, rank=4),
    "large": dict(hidden=(64, 64), d_h=16, rank=8),
}


def capacity_config(base: TrainConfig, mc: str) -> TrainConfig:
    try:
        return replace(base, **CAPACITY_PRESETS[mc])
    except KeyError:
        raise ConfigError(f"unknown capacity preset {mc!r}; choose from {sorted(CAPACITY_PRESETS)}") from None


def regime_config(base: TrainConfig, f: int) -> TrainConfig:
    return base.regime(reweight=bool(f))


@dataclass
class InterventionResult:
    outcomes: dict
    strata: list
    scores: dict                     # (f, mc) -> test scores
    skew: dict                       # (f, mc) -> test skew of that model
    fairness_level: dict             # (f, mc) -> binarized fairness of that model
    dropped: list = field(default_factory=list)

    def outcome_fn(self, test: Dataset):
        """Closure recomputing the outcome table on resampled test indices."""
        cells = sorted(self.scores)
        S = np.stack([self.scores[c] for c in cells], axis=1)
        y = test.labels
        mcs = sorted({s.mc for s in self.strata})

        def fn(groups: dict) -> dict:
            out = {}
            for dd, idx in groups.items():
                col = auc_columns(S[idx], y[idx])
                for (f, mc), v in zip(cells, col):
                    if mc in mcs:
                        out[(f, (dd, mc))] = float(v)
            return out

        return fn


def strata_from_test(test: Dataset, mc_grid: Sequence[str]) -> tuple[list[Stratum], list]:
    """P(dd, mc) = test frequency of dd times 1/|mc_grid|.

    DD strata whose test samples hold a single class are dropped and the rest
    renormalized.
    """
    buckets = partition_by_subgroup(test)
    keep, dropped = {}, []
    for dd, idx in buckets.items():
        y = test.labels[idx]
        if y.min() == y.max():
            dropped.append(dd)
            log.warning("stratum %s lacks one class in the test set; dropped", tuple(dd))
        else:
            keep[dd] = len(idx)
    total = sum(keep.values())
    strata = [Stratum(dd, mc, n / total / len(mc_grid)) for dd, n in keep.items() for mc in mc_grid]
    return strata, dropped


def run_intervention_experiment(train_ds: Dataset, test: Dataset, mc_grid: Sequence[str] = ("small", "large"),
                                seed: int = 0, base: TrainConfig = TrainConfig(),
                                metric_config: MetricConfig = MetricConfig(),
                                fairness_threshold: float = 0.5) -> InterventionResult:
    if len(set(mc_grid)) != len(mc_grid) or not mc_grid:
        raise ConfigError("mc_grid must be a non-empty list of distinct presets")
    base = replace(base, seed=seed, normalize=False, attr=False, ortho=False)
    strata, dropped = strata_from_test(test, mc_grid)
    scores, skews, levels = {}, {}, {}
    for mc in mc_grid:
        cap = capacity_config(base, mc)
        for f in (0, 1):
            result = train(train_ds, regime_config(cap, f))
            s = result.scores(test)
            scores[(f, mc)] = s
            skews[(f, mc)] = evaluate(test, s, metric_config).skew
            levels[(f, mc)] = binarize_fairness(skews[(f, mc)], fairness_threshold)
    res = InterventionResult({}, strata, scores, skews, levels, dropped)
    buckets = partition_by_subgroup(test)
    res.outcomes = res.outcome_fn(test)({s.dd: buckets[s.dd] for s in strata})
    return res


def estimate_ace(train_ds: Dataset, test: Dataset, mc_grid: Sequence[str] = ("small", "large"),
                 seed: int = 0, B: int = 1000, alpha: float = 0.05, base: TrainConfig = TrainConfig(),
                 metric_config: MetricConfig = MetricConfig(),
                 fairness_threshold: float = 0.5) -> tuple[AceReport, InterventionResult]:
    """Train the intervention grid, then bootstrap the ACE over the test set."""
    exp = run_intervention_experiment(train_ds, test, mc_grid, seed, base, metric_config, fairness_threshold)
    report = stratified_bootstrap(exp.outcome_fn(test), test, exp.strata, B, alpha, seed)
    return report, exp
