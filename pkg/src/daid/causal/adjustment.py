"""Back-door adjustment over (DD, MC) strata, ACE, and stratified bootstrap inference."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..domain import Dataset, SubgroupKey, partition_by_subgroup
from ..errors import MissingCell, WeightSumError

log = logging.getLogger(__name__)

WEIGHT_TOL = 1e-9
MAX_REDRAWS = 10


@dataclass(frozen=True)
class Stratum:
    dd: SubgroupKey
    mc: str
    weight: float

    @property
    def key(self) -> tuple:
        return (self.dd, self.mc)

    def to_json(self) -> dict:
        return {"dd": list(self.dd), "mc": self.mc, "weight": self.weight}


def _check_weights(strata: Sequence[Stratum]):
    total = sum(s.weight for s in strata)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise WeightSumError(f"stratum weights sum to {total!r}, expected 1")


def backdoor_adjust(outcomes: dict, strata: Sequence[Stratum], f: int) -> float:
    """Plug-in estimate of the outcome under do(F=f): sum_s outcome(f, s) P(s)."""
    _check_weights(strata)
    total = 0.0
    for s in strata:
        try:
            total += outcomes[(f, s.key)] * s.weight
        except KeyError:
            raise MissingCell(f"no outcome for f={f}, stratum {s.key}") from None
    return total


def ace(outcomes: dict, strata: Sequence[Stratum]) -> tuple[float, float]:
    """(ACE, mu0) with ACE = adjust(1) - adjust(0) and mu0 = adjust(0)."""
    mu0 = backdoor_adjust(outcomes, strata, 0)
    return backdoor_adjust(outcomes, strata, 1) - mu0, mu0


def do_outcome(mu0: float, ace_value: float, f: int) -> float:
    """Linear do-form: mu0 + f * ACE."""
    return mu0 + f * ace_value


def binarize_fairness(skew_value: float, threshold: float = 0.5) -> int:
    """1 (high fairness) iff |skew| < threshold."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return 1 if abs(skew_value) < threshold else 0


@dataclass
class AceReport:
    ace: float
    mu0: float
    per_stratum: list
    ci_low: float
    ci_high: float
    p_value: float
    B: int
    alpha: float
    seed: int
    replicates: np.ndarray = field(default=None, repr=False)
    redrawn: int = 0
    carried: int = 0

    def to_json(self, schema=None) -> dict:
        rows = []
        for s, f0, f1 in self.per_stratum:
            rows.append({"dd": list(s.dd), "dd_name": schema.group_name(s.dd) if schema else None,
                         "mc": s.mc, "weight": s.weight, "outcome_f0": f0, "outcome_f1": f1,
                         "diff": f1 - f0})
        return {"ace": self.ace, "mu0": self.mu0, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "p_value": self.p_value, "B": self.B, "alpha": self.alpha, "seed": self.seed,
                "degenerate_redraws": self.redrawn, "degenerate_carried": self.carried,
                "per_stratum": rows}

    def summary(self) -> str:
        level = round(100 * (1 - self.alpha))
        return (f"ACE = {self.ace:.4f}, {level}% CI [{self.ci_low:.4f}, {self.ci_high:.4f}], "
                f"two-sided p = {self.p_value:.4g} (B = {self.B})")


def bootstrap_p_value(replicates: np.ndarray) -> float:
    """2 * min(P*(ace <= 0), P*(ace >= 0)), clipped to [1/B, 1]."""
    B = len(replicates)
    p = 2.0 * min(np.mean(replicates <= 0), np.mean(replicates >= 0))
    return float(min(max(p, 1.0 / B), 1.0))


def stratified_bootstrap(outcome_fn: Callable[[dict], dict], test: Dataset, strata: Sequence[Stratum],
                         B: int = 1000, alpha: float = 0.05, seed: int = 0) -> AceReport:
    """Percentile bootstrap for the ACE, resampling the test set within each DD stratum.

    ``outcome_fn`` maps {dd: sample indices} to an outcome table
    {(f, (dd, mc)): value}; it may leave out cells it cannot compute.
    Trained models stay fixed; only evaluation samples are resampled.
    Replicate b draws from ``default_rng([seed, b])``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    _check_weights(strata)
    buckets = partition_by_subgroup(test)
    used = sorted({s.dd for s in strata})
    full = outcome_fn({dd: buckets[dd] for dd in used})
    point, mu0 = ace(full, strata)
    y = test.labels
    reps = np.empty(B)
    redrawn = carried = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        draw = {}
        lost = []
        for dd in used:
            idx = buckets[dd]
            for attempt in range(MAX_REDRAWS + 1):
                pick = idx[rng.integers(0, len(idx), size=len(idx))]
                if y[pick].min() != y[pick].max():
                    break
                redrawn += 1
            else:
                lost.append(dd)
                carried += 1
                log.warning("replicate %d: stratum %s lost a class %d times; carrying full-data outcome",
                            b, tuple(dd), MAX_REDRAWS + 1)
                continue
            draw[dd] = pick
        out = outcome_fn(draw)
        table = dict(full)
        table.update({k: v for k, v in out.items() if k[1][0] not in lost})
        reps[b] = ace(table, strata)[0]
    lo, hi = np.quantile(reps, [alpha / 2.0, 1.0 - alpha / 2.0])
    per = [(s, full[(0, s.key)], full[(1, s.key)]) for s in strata]
    return AceReport(point, mu0, per, float(lo), float(hi), bootstrap_p_value(reps), B, alpha, seed,
                     reps, redrawn, carried)
