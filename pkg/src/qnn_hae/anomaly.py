"""Reconstruction-error scoring, rank AUC, contamination thresholds, benchmarks."""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, NormStats, load_csv, looks_unnormalized, normalize_apply, normalize_fit, split
from .errors import DataError, DivergenceError, LoadError, RangeError, UndefinedMetricError
from .models import ModelKind, build_model, count_flops, count_params, model_forward
from .numerics import rng_stream
from .svg import bar_chart
from .training import TrainConfig, grid_search, train

logger = logging.getLogger(__name__)


@dataclass
class ScoreReport:
    scores: np.ndarray
    labels: np.ndarray
    auc: float
    threshold: float
    flags: np.ndarray


def score(m, x, check_stats=True):
    """Squared L2 reconstruction error per row, in eval mode (no dropout)."""
    x = np.asarray(x, dtype=np.float64)
    if check_stats and m.norm_stats is not None:
        stats = NormStats.from_dict(m.norm_stats)
        if looks_unnormalized(x, stats):
            raise DataError("input looks unnormalized; apply the model's stored training statistics first")
    recon, _ = model_forward(m, x, train=False)
    diff = recon - x
    return np.sum(diff * diff, axis=1)


def average_ranks(values):
    """1-based ranks with ties sharing their mean rank."""
    values = np.asarray(values)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size, dtype=np.float64)
    # boundaries of runs of equal values
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], values.size]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + 1 + e)
    return ranks


def auc(scores, labels):
    """Mann-Whitney AUC: P(anomaly outscores normal), ties counted one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative label")
    ranks = average_ranks(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_bruteforce(scores, labels):
    """O(P*N) pairwise count; reference for ``auc``."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    pos, neg = scores[labels], scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative label")
    count = 0.0
    for p in pos:
        for q in neg:
            count += 1.0 if p > q else 0.5 if p == q else 0.0
    return count / (pos.size * neg.size)


def apply_threshold(scores_train, contamination, scores_test):
    if not 0.0 < contamination <= 0.5:
        raise RangeError(f"contamination must lie in (0, 0.5], got {contamination}")
    threshold = float(np.quantile(np.asarray(scores_train, dtype=np.float64), 1.0 - contamination))
    return threshold, np.asarray(scores_test) > threshold


# ---- single runs


def fit_detector(dataset, kind, cfg, seed):
    """Train one model on the normal rows of ``dataset``; returns ``(model, stats, history, train_x, test_x, y)``."""
    train_raw, test_raw, y = split(dataset)
    stats = normalize_fit(train_raw)
    train_x = normalize_apply(train_raw, stats)
    test_x = normalize_apply(test_raw, stats)
    cfg = cfg.replace(seed=int(seed))
    m = build_model(kind, dataset.n_features, rng=rng_stream(seed, 0), seed=int(seed))
    m.norm_stats = stats.to_dict()
    m, history = train(m, train_x, cfg, rng=rng_stream(seed, 1))
    return m, stats, history, train_x, test_x, y


def run_once(dataset, kind, cfg, seed, contamination=None):
    """Train and evaluate one (dataset, kind, config, seed) cell."""
    try:
        m, _, history, train_x, test_x, y = fit_detector(dataset, kind, cfg, seed)
    except DivergenceError as exc:
        logger.warning("%s/%s seed %s diverged: %s", dataset.name, kind, seed, exc)
        return {"auc": 0.5, "diverged": True, "final_loss": float("nan")}
    test_scores = score(m, test_x, check_stats=False)
    out = {"auc": auc(test_scores, y), "diverged": False, "final_loss": float(history[-1])}
    c = contamination if contamination is not None else dataset.contamination
    if 0.0 < c <= 0.5:
        out["threshold"], flags = apply_threshold(score(m, train_x, check_stats=False), c, test_scores)
        out["flagged"] = int(flags.sum())
    return out


def _run_job(args):
    return run_once(*args)


def evaluate_runs(dataset, kind, cfg_seed_pairs, jobs=1):
    tasks = [(dataset, kind, cfg, seed) for cfg, seed in cfg_seed_pairs]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_job, tasks))
    return [_run_job(t) for t in tasks]


# ---- benchmark


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)
    cells: dict = field(default_factory=dict)
    configs: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    avg_auc: dict = field(default_factory=dict)
    avg_rank: dict = field(default_factory=dict)

    def summary(self):
        return {
            "avg_auc": self.avg_auc,
            "avg_rank": self.avg_rank,
            "configs": self.configs,
            "errors": self.errors,
        }


def rank_kinds(cells):
    """Average rank per kind across datasets; rank 1 is the best mean AUC."""
    totals = {}
    counts = {}
    for per_kind in cells.values():
        kinds = list(per_kind)
        means = np.array([per_kind[k]["mean"] for k in kinds])
        ranks = average_ranks(-means)
        for k, r in zip(kinds, ranks):
            totals[k] = totals.get(k, 0.0) + float(r)
            counts[k] = counts.get(k, 0) + 1
    return {k: totals[k] / counts[k] for k in totals}


def _as_dataset(item, label_column):
    if isinstance(item, Dataset):
        return item
    return load_csv(item, label_column=label_column)


def benchmark(datasets, kinds, cfg=None, seeds=(0,), grid=None, label_column="label", jobs=1):
    """Evaluate every (dataset, kind) over ``seeds``; with ``grid``, grid-search lr and batch first."""
    cfg = cfg or TrainConfig()
    kinds = [ModelKind.parse(k) for k in kinds]
    report = BenchmarkReport()
    for item in datasets:
        name = item.name if isinstance(item, Dataset) else Path(str(item)).stem
        try:
            ds = _as_dataset(item, label_column)
        except (LoadError, DataError, OSError) as exc:
            report.errors[name] = str(exc)
            logger.error("dataset %s failed to load: %s", name, exc)
            continue
        name = ds.name
        per_kind = {}
        for kind in kinds:
            if grid is not None:
                best, table = grid_search(ds, kind, grid, seeds, cfg, jobs=jobs)
                row = next(r for r in table if (r["learning_rate"], r["batch_size"]) == (best.learning_rate, best.batch_size))
                aucs, diverged = row["aucs"], row["diverged"]
                report.configs.setdefault(name, {})[kind.label] = {
                    "learning_rate": best.learning_rate,
                    "batch_size": best.batch_size,
                    "grid": table,
                }
            else:
                runs = evaluate_runs(ds, kind, [(cfg, s) for s in seeds], jobs=jobs)
                aucs, diverged = [r["auc"] for r in runs], sum(r["diverged"] for r in runs)
            for seed, a in zip(seeds, aucs):
                report.rows.append({"dataset": name, "kind": kind.label, "seed": int(seed), "auc": a})
            probe = build_model(kind, ds.n_features, seed=0)
            per_kind[kind.label] = {
                "mean": float(np.mean(aucs)),
                "std": float(np.std(aucs)),
                "params": count_params(probe),
                "flops": count_flops(probe),
                "diverged": int(diverged),
            }
        report.cells[name] = per_kind
    if report.cells:
        labels = [k.label for k in kinds]
        report.avg_auc = {k: float(np.mean([c[k]["mean"] for c in report.cells.values()])) for k in labels}
        report.avg_rank = rank_kinds(report.cells)
    return report


def write_report(report, out_dir, prefix="benchmark"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{prefix}_results.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "kind", "seed", "auc"])
        for row in report.rows:
            w.writerow([row["dataset"], row["kind"], row["seed"], repr(float(row["auc"]))])
    json_path = out / f"{prefix}_summary.json"
    json_path.write_text(json.dumps(report.cells, indent=2, sort_keys=True))
    ranking_path = out / f"{prefix}_ranking.json"
    ranking_path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True))
    svg_path = out / f"{prefix}_auc.svg"
    if report.avg_auc:
        svg_path.write_text(bar_chart(list(report.avg_auc), list(report.avg_auc.values()), "Mean AUC per model"))
    return {"csv": csv_path, "json": json_path, "ranking": ranking_path, "svg": svg_path}
