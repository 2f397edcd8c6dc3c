"""The 2^4 regime grid (reweight x normalize x attr x ortho) and the lambda sweep.

Every cell trains one model per seed and scores it on each test domain. A
cell is a pure function of (data, config, seed), so cells may run in worker
processes without changing any number.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .domain import Dataset
from .errors import ConfigError
from .metrics import MetricConfig, evaluate
from .model import TrainConfig, train
from .synthgen import ScmConfig, generate

FLAGS = ("reweight", "normalize", "attr", "ortho")
GRID = [dict(zip(FLAGS, bits)) for bits in itertools.product((False, True), repeat=4)]
BASELINE = dict.fromkeys(FLAGS, False)
FULL = dict.fromkeys(FLAGS, True)
# the incremental rows reported between baseline and full model
STAGED_ROWS = [
    dict(reweight=True, normalize=False, attr=False, ortho=False),
    dict(reweight=True, normalize=True, attr=False, ortho=False),
    dict(reweight=False, normalize=False, attr=True, ortho=False),
    dict(reweight=False, normalize=False, attr=True, ortho=True),
    dict(reweight=True, normalize=True, attr=True, ortho=False),
]
DOMAINS = ("source", "shifted")


def regime_name(flags: dict) -> str:
    on = [f for f in FLAGS if flags[f]]
    return "+".join(on) if on else "baseline"


@dataclass(frozen=True)
class CellResult:
    flags: tuple
    seed: int
    auc: dict       # domain -> AUC
    skew: dict      # domain -> Skew


def run_cell(flags: dict, seed: int, base: TrainConfig, metric: MetricConfig,
             scm: ScmConfig | None = None, data: tuple | None = None) -> CellResult:
    """Train one regime at one seed; data comes from ``data`` or is generated from ``scm``."""
    if data is None:
        train_ds, src, shifted = generate(replace(scm, seed=seed))
    else:
        train_ds, src, shifted = data
    cfg = replace(base, seed=seed).regime(**flags)
    result = train(train_ds, cfg)
    auc, skew = {}, {}
    for name, ds in zip(DOMAINS, (src, shifted)):
        rep = evaluate(ds, result.scores(ds), metric)
        auc[name], skew[name] = rep.auc_overall, rep.skew
    return CellResult(tuple(flags[f] for f in FLAGS), seed, auc, skew)


def _run(args):
    return run_cell(*args)


def threads_from_env(default: int = 1) -> int:
    raw = os.environ.get("DAID_THREADS")
    if raw is None or raw == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DAID_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("DAID_THREADS must be a positive integer")
    return n


def run_cells(jobs: list, threads: int = 1) -> list[CellResult]:
    if threads <= 1 or len(jobs) <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run, jobs))


@dataclass(frozen=True)
class GridRow:
    flags: dict
    auc: dict           # domain -> mean over seeds
    skew: dict
    cells: tuple        # per-seed CellResults

    @property
    def name(self) -> str:
        return regime_name(self.flags)

    def to_csv_row(self) -> dict:
        row = {f: int(self.flags[f]) for f in FLAGS}
        row["regime"] = self.name
        for d in DOMAINS:
            row[f"skew_{d}"] = repr(self.skew[d])
            row[f"auc_{d}"] = repr(self.auc[d])
        row["n_seeds"] = len(self.cells)
        return row


CSV_FIELDS = list(FLAGS) + ["regime"] + [f"{m}_{d}" for d in DOMAINS for m in ("skew", "auc")] + ["n_seeds"]


def _aggregate(flags: dict, cells: list[CellResult]) -> GridRow:
    auc = {d: float(np.mean([c.auc[d] for c in cells])) for d in DOMAINS}
    skew = {d: float(np.mean([c.skew[d] for c in cells])) for d in DOMAINS}
    return GridRow(dict(flags), auc, skew, tuple(cells))


def ablation_grid(seeds: Sequence[int], base: TrainConfig = TrainConfig(),
                  metric: MetricConfig = MetricConfig(), scm: ScmConfig | None = ScmConfig(),
                  data: tuple | None = None, regimes: Sequence[dict] = GRID,
                  threads: int = 1) -> list[GridRow]:
    """Seed-averaged AUC and Skew per regime and test domain."""
    jobs = [(flags, s, base, metric, scm, data) for flags in regimes for s in seeds]
    cells = run_cells(jobs, threads)
    k = len(seeds)
    return [_aggregate(flags, cells[i * k:(i + 1) * k]) for i, flags in enumerate(regimes)]


def find_row(rows: Sequence[GridRow], flags: dict) -> GridRow:
    for r in rows:
        if r.flags == flags:
            return r
    raise KeyError(regime_name(flags))


def weakly_between(value: float, a: float, b: float) -> bool:
    lo, hi = min(a, b), max(a, b)
    return lo <= value <= hi


def lambda_sweep(seeds: Sequence[int], lambdas_attr=(0.35, 0.7, 1.4), lambdas_ortho=(0.1, 0.2, 0.4),
                 base: TrainConfig = TrainConfig(), metric: MetricConfig = MetricConfig(),
                 scm: ScmConfig = ScmConfig(), threads: int = 1) -> dict:
    """Full-DAID shifted AUC (seed mean) for each (lambda_attr, lambda_ortho) pair."""
    pairs = list(itertools.product(lambdas_attr, lambdas_ortho))
    jobs = [(FULL, s, replace(base, lambda_attr=la, lambda_ortho=lo), metric, scm, None)
            for la, lo in pairs for s in seeds]
    cells = run_cells(jobs, threads)
    k = len(seeds)
    return {pair: _aggregate(FULL, cells[i * k:(i + 1) * k]) for i, pair in enumerate(pairs)}
