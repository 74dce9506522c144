"""``qnn-hae`` command line: train, score, benchmark, theory, gradcheck.

Exit codes: 0 success, 1 computational failure, 2 usage error.  Errors are
also written to stderr as one JSON object.
"""

import argparse
import csv
import datetime
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anomaly import apply_threshold, auc, benchmark, fit_detector, score, write_report
from .data import NormStats, load_csv, normalize_apply
from .errors import (
    ConfigurationError,
    MissingFileError,
    MissingLabelColumnError,
    QnnHaeError,
    UndefinedMetricError,
)
from .gradcheck import STEP_RANGE, run_suites
from .models import ModelKind, load_checkpoint, save_checkpoint
from .theory import SeparationConfig, invariant_suite, separation_experiment, write_separation
from .training import TrainConfig, write_history

logger = logging.getLogger("qnn_hae")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
USAGE_ERRORS = (ConfigurationError, MissingFileError, MissingLabelColumnError)
SEED_ENV = "QNN_HAE_SEED"
DEFAULT_BENCHMARK_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_KINDS = ("ae", "qae", "hae-x", "hae-y", "hae-i")
KIND_CHOICES = tuple(k.label.lower() for k in ModelKind)
CONFIG_KEYS = {"train", "theory", "grid", "datasets", "kinds", "seeds", "out", "jobs", "label_column", "contamination"}

TRAIN_FLAGS = {
    "epochs": "epochs",
    "learning_rate": "learning_rate",
    "batch_size": "batch_size",
    "dropout": "dropout_prob",
    "relinear_factor": "relinear_factor",
}


class UsageError(ConfigurationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--config", type=Path, help="JSON config; command-line flags override it")
    p.add_argument("--out", type=Path, help="output directory (default: qnn-hae-out)")
    p.add_argument("--jobs", type=int, help="worker processes for independent cells")
    p.add_argument("--seed", type=int, action="append", help="random seed (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")


def _data_flags(p, multi):
    p.add_argument("--dataset", type=Path, action="append", help="CSV file" + (" (repeatable)" if multi else ""))
    p.add_argument("--label-column", help="name of the 0/1 label column (default: label)")
    p.add_argument("--contamination", type=float, help="expected anomaly fraction for the threshold")


def _train_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--relinear-factor", type=float)


def build_parser():
    parser = _Parser(prog="qnn-hae", description="Quadratic-neuron autoencoders for anomaly detection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="train one autoencoder and write a checkpoint")
    _common(p)
    _data_flags(p, multi=False)
    _train_flags(p)
    p.add_argument("--kind", help=f"model kind: {', '.join(KIND_CHOICES)}")

    p = sub.add_parser("score", help="score a dataset with a checkpoint")
    _common(p)
    _data_flags(p, multi=False)
    p.add_argument("--checkpoint", type=Path, required=False)

    p = sub.add_parser("benchmark", help="AUC over datasets x kinds x seeds")
    _common(p)
    _data_flags(p, multi=True)
    _train_flags(p)
    p.add_argument("--kind", action="append", help="model kind (repeatable)")
    p.add_argument("--grid-search", action="store_true", help="grid-search learning rate and batch size per cell")

    p = sub.add_parser("theory", help="separation experiment and construction invariants")
    _common(p)
    p.add_argument("--dimension", type=int)
    p.add_argument("--width", type=int, action="append", help="network width (repeatable)")
    p.add_argument("--measure", choices=("uniform_ball", "mu_phi_squared"))
    p.add_argument("--steps", type=int, help="Adam steps per fit")
    p.add_argument("--samples", type=int, help="training (and held-out) samples per fit")
    p.add_argument("--invariants-only", action="store_true", help="skip the width sweep")

    p = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    _common(p)
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--dimension", type=int, default=6)
    return parser


# ---- config resolution


def _load_config(path):
    if path is None:
        return {}
    if not path.is_file():
        raise MissingFileError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}; allowed: {sorted(CONFIG_KEYS)}")
    return doc


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _seeds(args, cfg, default):
    if args.seed:
        return list(args.seed)
    if "seeds" in cfg:
        return [int(s) for s in cfg["seeds"]]
    env = _env_seed()
    return [env] if env is not None else list(default)


def _out_dir(args, cfg):
    out = args.out or (Path(cfg["out"]) if "out" in cfg else Path("qnn-hae-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jobs(args, cfg):
    jobs = args.jobs if args.jobs is not None else int(cfg.get("jobs", 1))
    if jobs < 1:
        raise ConfigurationError(f"--jobs must be >= 1, got {jobs}")
    return jobs


def _train_config(args, cfg, seed=0):
    doc = dict(cfg.get("train", {}))
    for flag, key in TRAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    doc.setdefault("seed", seed)
    return TrainConfig.from_dict(doc)


def _contamination(args, cfg):
    value = args.contamination if args.contamination is not None else cfg.get("contamination")
    if value is not None and not 0.0 < float(value) <= 0.5:
        raise ConfigurationError(f"--contamination must lie in (0, 0.5], got {value}")
    return None if value is None else float(value)


def _datasets(args, cfg):
    paths = args.dataset or [Path(p) for p in cfg.get("datasets", [])]
    if not paths:
        raise ConfigurationError("at least one --dataset is required")
    return paths


def _label_column(args, cfg):
    return args.label_column or cfg.get("label_column", "label")


def _write_metadata(out, command, extra=None):
    # the only place a wall-clock timestamp is written
    doc = {
        "command": command,
        "argv": sys.argv[1:],
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    doc.update(extra or {})
    path = out / f"{command}_run_metadata.json"
    path.write_text(json.dumps(doc, indent=2))
    return path


def _emit(doc):
    print(json.dumps(doc, indent=2, default=str, allow_nan=True))


# ---- commands


def cmd_train(args):
    cfg = _load_config(args.config)
    paths = _datasets(args, cfg)
    if len(paths) != 1:
        raise ConfigurationError("train takes exactly one --dataset")
    kind = ModelKind.parse(args.kind or (cfg.get("kinds") or ["hae-x"])[0])
    seed = _seeds(args, cfg, (0,))[0]
    tcfg = _train_config(args, cfg, seed).replace(seed=seed)
    out = _out_dir(args, cfg)
    ds = load_csv(paths[0], label_column=_label_column(args, cfg))
    m, _, history, train_x, _, _ = fit_detector(ds, kind, tcfg, seed)
    m.meta = {"dataset": ds.name, "train_config": tcfg.to_dict(), "train_scores": score(m, train_x, check_stats=False).tolist()}
    stem = f"{ds.name}_{kind.label.lower()}_seed{seed}"
    ck = save_checkpoint(m, out / f"{stem}.checkpoint.json")
    hist = write_history(history, out / f"{stem}.history.csv")
    _write_metadata(out, "train")
    _emit({"checkpoint": str(ck), "history": str(hist), "final_loss": history[-1], "kind": kind.label, "seed": seed})
    return EXIT_OK


def cmd_score(args):
    cfg = _load_config(args.config)
    if args.checkpoint is None:
        raise ConfigurationError("score needs --checkpoint")
    if not args.checkpoint.is_file():
        raise MissingFileError(f"checkpoint not found: {args.checkpoint}")
    paths = _datasets(args, cfg)
    if len(paths) != 1:
        raise ConfigurationError("score takes exactly one --dataset")
    out = _out_dir(args, cfg)
    m = load_checkpoint(args.checkpoint)
    ds = load_csv(paths[0], label_column=_label_column(args, cfg))
    if m.norm_stats is None:
        raise ConfigurationError("checkpoint carries no normalization statistics")
    x = normalize_apply(ds.X, NormStats.from_dict(m.norm_stats))
    s = score(m, x)
    c = _contamination(args, cfg)
    if c is None:
        c = ds.contamination if 0.0 < ds.contamination <= 0.5 else 0.1
    train_scores = m.meta.get("train_scores")
    threshold, flags = apply_threshold(train_scores if train_scores else s, c, s)
    summary = {"dataset": ds.name, "rows": int(s.size), "threshold": threshold, "flagged": int(flags.sum()), "contamination": c}
    try:
        summary["auc"] = auc(s, ds.y)
    except UndefinedMetricError:
        summary["auc"] = None
    path = out / f"{ds.name}_scores.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "score", "label", "flag"])
        for i, (v, y, f) in enumerate(zip(s, ds.y, flags)):
            w.writerow([i, repr(float(v)), int(y), int(f)])
    summary["scores"] = str(path)
    _write_metadata(out, "score")
    _emit(summary)
    return EXIT_OK


def cmd_benchmark(args):
    cfg = _load_config(args.config)
    paths = _datasets(args, cfg)
    kinds = [ModelKind.parse(k) for k in (args.kind or cfg.get("kinds") or DEFAULT_KINDS)]
    seeds = _seeds(args, cfg, DEFAULT_BENCHMARK_SEEDS)
    tcfg = _train_config(args, cfg)
    jobs = _jobs(args, cfg)
    grid = cfg.get("grid") if (args.grid_search or "grid" in cfg) else None
    if args.grid_search and grid is None:
        grid = {}
    if grid is not None:
        unknown = set(grid) - {"learning_rates", "batch_sizes"}
        if unknown:
            raise ConfigurationError(f"unknown grid keys: {sorted(unknown)}")
    out = _out_dir(args, cfg)
    report = benchmark(paths, kinds, tcfg, seeds, grid=grid, label_column=_label_column(args, cfg), jobs=jobs)
    files = write_report(report, out)
    _write_metadata(out, "benchmark")
    _emit({"files": {k: str(v) for k, v in files.items()}, **report.summary(), "cells": report.cells})
    if not report.cells:
        logger.error("every dataset failed")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_theory(args):
    cfg = _load_config(args.config)
    doc = dict(cfg.get("theory", {}))
    overrides = {
        "d": args.dimension,
        "widths": args.width,
        "measure": args.measure,
        "steps": args.steps,
        "n_samples": args.samples,
        "jobs": args.jobs,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed:
        doc["seeds"] = args.seed
    elif "seeds" not in doc:
        env = _env_seed()
        if env is not None:
            doc["seeds"] = [env]
    scfg = SeparationConfig.from_dict(doc)
    out = _out_dir(args, cfg)
    checks = invariant_suite()
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        extra = f" delta={c['delta']}" if "delta" in c else ""
        print(f"{status} {c['check']} d={c['d']}{extra}: {c['value']!r} (expected {c['expected']}, tol {c['tolerance']:g})", file=sys.stderr)
    (out / "theory_invariants.json").write_text(json.dumps(checks, indent=2))
    summary = {"invariants_passed": all(c["passed"] for c in checks), "invariants": len(checks)}
    if not args.invariants_only:
        result = separation_experiment(scfg)
        files = write_separation(result, out)
        summary.update({"matrix": result.matrix, "medians": result.medians, "files": {k: str(v) for k, v in files.items()}})
        summary["failed_cells"] = len(result.failures)
    _write_metadata(out, "theory")
    _emit(summary)
    return EXIT_OK if summary["invariants_passed"] else EXIT_FAILURE


def cmd_gradcheck(args):
    cfg = _load_config(args.config)
    step = args.step
    if not step > 0:
        raise ConfigurationError(f"--step must be > 0, got {step}")
    lo, hi = STEP_RANGE
    if step < lo:
        print(f"warning: step {step:g} underflows f64 conditioning (roundoff ~1e-16/step dominates); use a step in [{lo:g}, {hi:g}]", file=sys.stderr)
    elif step > hi:
        print(f"warning: step {step:g} is large; truncation error may dominate; use a step in [{lo:g}, {hi:g}]", file=sys.stderr)
    seed = _seeds(args, cfg, (0,))[0]
    ok, results = run_suites(step=step, d=args.dimension, seed=seed)
    failures = [r for r in results if not r["passed"]]
    for r in failures:
        print(f"FAIL {r['suite']} {r['path']}: relative error {r['error']:.3e} >= {r['tolerance']:g}", file=sys.stderr)
    if args.out or "out" in cfg:
        out = _out_dir(args, cfg)
        (out / "gradcheck.json").write_text(json.dumps(results, indent=2))
        _write_metadata(out, "gradcheck")
    worst = max(results, key=lambda r: r["error"] / r["tolerance"])
    _emit({"passed": ok, "checks": len(results), "failures": failures, "worst": worst})
    return EXIT_OK if ok else EXIT_FAILURE


COMMANDS = {
    "train": cmd_train,
    "score": cmd_score,
    "benchmark": cmd_benchmark,
    "theory": cmd_theory,
    "gradcheck": cmd_gradcheck,
}


def _error_json(exc, code):
    doc = exc.to_dict() if isinstance(exc, QnnHaeError) else {"error": "internal", "type": type(exc).__name__, "message": str(exc)}
    doc["exit_code"] = code
    print(json.dumps(doc), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"a command is required: {', '.join(COMMANDS)}")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        return _error_json(exc, EXIT_USAGE)
    except QnnHaeError as exc:
        return _error_json(exc, EXIT_FAILURE)
    except (FloatingPointError, ArithmeticError, MemoryError) as exc:
        return _error_json(exc, EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
