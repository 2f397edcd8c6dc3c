"""Command-line entry point: generate, train, evaluate, ace, backdoor-check, ablate.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.
Files a failing command had already written are removed.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import causal, io
from .ablation import CSV_FIELDS, DOMAINS, ablation_grid, threads_from_env
from .config import ExperimentConfig, RunRecord
from .errors import ConfigError, DaidError
from .metrics import evaluate
from .model import predict, train
from .synthgen import describe, generate

log = logging.getLogger("daid")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _data_ref(*paths) -> dict:
    return {str(p): _sha256(p) for p in paths}


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_generate(args, cfg: ExperimentConfig, out: io.ArtifactSet) -> dict:
    scm = cfg.scm_config
    sets = generate(scm)
    for name, ds in zip(("train", "test_source", "test_shifted"), sets):
        p = out.path(f"{name}.csv")
        out.paths.append(io.schema_path(p))
        io.save_dataset(ds, p)
    io.write_json(out.path("ground_truth.json"), describe(scm))
    return {"n_train": len(sets[0]), "n_test": len(sets[1])}


def cmd_train(args, cfg: ExperimentConfig, out: io.ArtifactSet) -> dict:
    t0 = time.perf_counter()
    ds = io.load_dataset(args.train)
    result = train(ds, cfg.train_config)
    io.save_checkpoint(out.path("checkpoint.json"), result.params, {"text": cfg.to_text()},
                       result.moments, result.propensity)
    io.write_history(out.path("history.csv"), result.history_rows())
    metrics = {"train": evaluate(ds, result.scores(ds), cfg.metric).to_json(ds.schema)}
    record = RunRecord("train", cfg.to_text(), cfg.seed, _data_ref(args.train), metrics, "history.csv",
                       wall_clock_seconds=time.perf_counter() - t0)
    io.write_json(out.path("run_record.json"), record.to_json(), versioned=False)
    return {"final_total_loss": result.history[-1].total if result.history else None}


def cmd_evaluate(args, cfg: ExperimentConfig, out: io.ArtifactSet) -> dict:
    params, _, moments = io.load_checkpoint(args.checkpoint)
    ds = io.load_dataset(args.data)
    report = evaluate(ds, predict(params, ds, moments), cfg.metric)
    io.write_json(out.path("metrics.json"), {"metrics": report.to_json(ds.schema),
                                             "data": _data_ref(args.data),
                                             "checkpoint": _sha256(args.checkpoint)})
    rows = [{"group": ds.schema.group_name(k), "n": report.n_by_group[k],
             "auc": repr(report.auc_by_group[k]) if k in report.auc_by_group else "",
             "rate": repr(report.rate_by_group[k]) if k in report.rate_by_group else ""}
            for k in sorted(report.n_by_group)]
    io.write_rows(out.path("radar.csv"), ["group", "n", "auc", "rate"], rows)
    return {"auc": report.auc_overall, "skew": report.skew}


def cmd_ace(args, cfg: ExperimentConfig, out: io.ArtifactSet) -> dict:
    t0 = time.perf_counter()
    if (args.train is None) != (args.test is None):
        raise ConfigError("give both TRAIN and TEST data files, or neither")
    if args.train is not None:
        train_ds, test = io.load_dataset(args.train), io.load_dataset(args.test)
        data = _data_ref(args.train, args.test)
    else:
        scm = replace(cfg.scm_config, n_train=cfg.ace.n_train)
        train_ds, _, test = generate(scm)
        data = {"generated": scm.to_json(), "test_domain": "shifted"}
    base = replace(cfg.train_config, epochs=cfg.ace.epochs)
    report, exp = causal.estimate_ace(train_ds, test, cfg.ace.mc_grid, cfg.seed, cfg.ace.B, cfg.ace.alpha,
                                      base, cfg.metric, cfg.ace.fairness_threshold)
    body = report.to_json(test.schema)
    body["cells"] = [{"f": f, "mc": mc, "skew": exp.skew[(f, mc)], "fairness_level": exp.fairness_level[(f, mc)]}
                     for f, mc in sorted(exp.skew)]
    body["dropped_strata"] = [test.schema.group_name(d) for d in exp.dropped]
    io.write_json(out.path("ace.json"), body)
    record = RunRecord("ace", cfg.to_text(), cfg.seed, data, ace=body,
                       wall_clock_seconds=time.perf_counter() - t0)
    io.write_json(out.path("run_record.json"), record.to_json(), versioned=False)
    print(report.summary())
    return {"ace": report.ace, "ci": [report.ci_low, report.ci_high], "p_value": report.p_value}


def cmd_backdoor_check(args, cfg, out) -> dict:
    if args.dag:
        try:
            text = Path(args.dag).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read DAG file {args.dag}: {exc.strerror}") from None
        g = causal.parse_dag(text)
    else:
        g = causal.fairness_dag()
    z = [s.strip() for s in args.z.split(",") if s.strip()] if args.z else []
    verdict = causal.backdoor_criterion(g, args.x, args.y, z)
    print(f"back-door criterion for {args.x} -> {args.y} given {{{', '.join(z)}}}: "
          f"{'satisfied' if verdict else 'violated'}; {verdict.reason}")
    if out is not None:
        io.write_json(out.path("backdoor.json"), {"x": args.x, "y": args.y, "z": z, **verdict.to_json()})
    return verdict.to_json()


def cmd_ablate(args, cfg: ExperimentConfig, out: io.ArtifactSet) -> dict:
    t0 = time.perf_counter()
    data = None
    scm = cfg.scm
    ref: dict = {"generated": scm.to_json()}
    if args.data:
        if len(args.data) != 3:
            raise ConfigError("ablate takes TRAIN TEST_SOURCE TEST_SHIFTED, or no data files")
        data = tuple(io.load_dataset(p) for p in args.data)
        ref = _data_ref(*args.data)
    rows = ablation_grid(cfg.ablate.seeds, cfg.train_config, cfg.metric, scm, data,
                         threads=threads_from_env())
    io.write_rows(out.path("ablation.csv"), CSV_FIELDS, [r.to_csv_row() for r in rows])
    body = {"seeds": list(cfg.ablate.seeds), "data": ref, "rows": [
        {"regime": r.name, "flags": r.flags, "auc": r.auc, "skew": r.skew,
         "per_seed": [{"seed": c.seed, "auc": c.auc, "skew": c.skew} for c in r.cells]} for r in rows]}
    io.write_json(out.path("ablation.json"), body)
    record = RunRecord("ablate", cfg.to_text(), cfg.seed, ref,
                       {r.name: {"auc": r.auc, "skew": r.skew} for r in rows},
                       wall_clock_seconds=time.perf_counter() - t0)
    io.write_json(out.path("run_record.json"), record.to_json(), versioned=False)
    for r in rows:
        print(f"{r.name:28s} " + "  ".join(f"{d}: skew {r.skew[d]:.3f} auc {r.auc[d]:.4f}" for d in DOMAINS))
    return {}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'section.key = value' config file")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="daid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write synthetic train/test CSVs")
    s = sub.add_parser("train", parents=[common], help="train one model")
    s.add_argument("train", help="training CSV")
    s = sub.add_parser("evaluate", parents=[common], help="AUC and Skew of a checkpoint")
    s.add_argument("checkpoint")
    s.add_argument("data")
    s = sub.add_parser("ace", parents=[common], help="back-door ACE of fairness on generalization")
    s.add_argument("train", nargs="?")
    s.add_argument("test", nargs="?")
    s = sub.add_parser("backdoor-check", parents=[common], help="test the back-door criterion")
    s.add_argument("dag", nargs="?", help="DAG file (default: bundled fairness graph)")
    s.add_argument("--x", default="F")
    s.add_argument("--y", default="A")
    s.add_argument("--z", default="DD,MC", help="comma-separated adjustment set")
    s = sub.add_parser("ablate", parents=[common], help="the 16-regime ablation grid")
    s.add_argument("data", nargs="*", help="TRAIN TEST_SOURCE TEST_SHIFTED (default: generated per seed)")
    return p


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ace": cmd_ace,
    "backdoor-check": cmd_backdoor_check,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        with io.ArtifactSet(args.out) as out:
            COMMANDS[args.command](args, cfg, out)
    except DaidError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error [FileNotFoundError]: {exc.filename}: no such file", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
