"""Reconstruction training: MSE loss, grouped-learning-rate Adam, epoch loop.

Quadratic parameter groups ``Wg, bg, Wb, c`` step with
``learning_rate * relinear_factor``; everything else steps with
``learning_rate``.
"""

import csv
import itertools
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DataError,
    DivergenceError,
    NumericOverflowError,
    ShapeError,
)
from .models import QUADRATIC_GROUPS, model_backward, model_forward
from .numerics import rng_stream

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATES = (1e-4, 5e-4, 1e-3, 5e-3, 1e-2)
DEFAULT_BATCH_SIZES = (32, 64, 128)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 1000
    dropout_prob: float = 0.5
    relinear_factor: float = 0.1
    seed: int = 0
    shuffle: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if int(self.epochs) < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.relinear_factor <= 1.0:
            raise ConfigurationError(f"relinear_factor must lie in (0, 1], got {self.relinear_factor}")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ConfigurationError(f"dropout_prob must lie in [0, 1), got {self.dropout_prob}")

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**doc)


def mse_loss(recon, x):
    """Mean over samples of the squared L2 distance, and its gradient w.r.t. ``recon``."""
    recon = np.asarray(recon, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if recon.shape != x.shape:
        raise ShapeError(f"reconstruction shape {recon.shape} differs from input shape {x.shape}")
    diff = recon - x
    batch = diff.shape[0]
    return float(np.sum(diff * diff) / batch), 2.0 * diff / batch


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_config(cls, cfg):
        return cls(beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)


def group_learning_rate(path, cfg):
    if path.rsplit(".", 1)[-1] in QUADRATIC_GROUPS:
        return cfg.learning_rate * cfg.relinear_factor
    return cfg.learning_rate


def adam_step(params, grads, state, cfg):
    """In-place bias-corrected Adam update of ``params`` (a ``path -> array`` map)."""
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for path, p in params.items():
        g = grads[path]
        if path not in state.m:
            state.m[path] = np.zeros_like(p)
            state.v[path] = np.zeros_like(p)
        m = state.m[path]
        v = state.v[path]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= group_learning_rate(path, cfg) * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def train(m, train_x, cfg, rng=None):
    """Fit ``m`` in place; returns ``(m, history)`` with one sample-weighted loss per epoch."""
    x = np.asarray(train_x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("training set is empty")
    if rng is None:
        rng = rng_stream(cfg.seed, 1)
    params = m.parameters()
    state = AdamState.for_config(cfg)
    n = x.shape[0]
    bs = min(int(cfg.batch_size), n)
    history = []
    for epoch in range(int(cfg.epochs)):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            xb = x[order[start : start + bs]]
            try:
                recon, caches = model_forward(m, xb, train=True, dropout_prob=cfg.dropout_prob, rng=rng)
            except NumericOverflowError as exc:
                raise DivergenceError(f"training diverged at epoch {epoch}: {exc}", epoch=epoch) from exc
            loss, grad = mse_loss(recon, xb)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            adam_step(params, model_backward(m, caches, grad), state, cfg)
            total += loss * xb.shape[0]
        history.append(total / n)
    return m, history


def write_history(history, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(history):
            w.writerow([epoch, repr(float(loss))])
    return path


def grid_search(dataset, kind, grid=None, seeds=(0,), base_cfg=None, jobs=1):
    """Score every (learning_rate, batch_size) cell by mean AUC over ``seeds``.

    Returns ``(best_cfg, table)``.  Diverged runs score AUC 0.5.  Ties go to the
    smaller learning rate, then the smaller batch size.  Fully diverged cells are
    only chosen when nothing else finished.
    """
    from .anomaly import evaluate_runs

    grid = grid or {}
    lrs = list(grid.get("learning_rates", DEFAULT_LEARNING_RATES))
    batches = list(grid.get("batch_sizes", DEFAULT_BATCH_SIZES))
    if not lrs or not batches or not seeds:
        raise ConfigurationError("grid search needs at least one learning rate, batch size and seed")
    base_cfg = base_cfg or TrainConfig()
    cells = [base_cfg.replace(learning_rate=float(lr), batch_size=int(bs)) for lr, bs in itertools.product(lrs, batches)]
    jobs_list = [(cfg, seed) for cfg in cells for seed in seeds]
    results = evaluate_runs(dataset, kind, jobs_list, jobs=jobs)
    table = []
    for ci, cfg in enumerate(cells):
        runs = results[ci * len(seeds) : (ci + 1) * len(seeds)]
        aucs = [r["auc"] for r in runs]
        table.append(
            {
                "learning_rate": cfg.learning_rate,
                "batch_size": cfg.batch_size,
                "mean_auc": float(np.mean(aucs)),
                "std_auc": float(np.std(aucs)),
                "diverged": sum(r["diverged"] for r in runs),
                "aucs": aucs,
            }
        )
    # a cell whose every run diverged never wins while some cell produced a finite run
    best = max(
        range(len(cells)),
        key=lambda i: (
            table[i]["diverged"] < len(seeds),
            table[i]["mean_auc"],
            -cells[i].learning_rate,
            -cells[i].batch_size,
        ),
    )
    logger.info("grid search %s/%s: best lr=%g batch=%d", dataset.name, kind, cells[best].learning_rate, cells[best].batch_size)
    return cells[best], table


def _loss_at(m, x):
    recon, _ = model_forward(m, x, train=False)
    return mse_loss(recon, x)[0]


def relative_error(analytic, numeric, floor=1e-4):
    # entries below ``floor`` are compared absolutely: FD roundoff is ~1e-10 there
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def gradient_check(m, x, step=1e-6, floor=1e-4, report=False):
    """Max per-entry relative error between backprop and central differences of the MSE loss.

    With ``report=True`` returns ``(max_error, {path: max_error})``.
    """
    x = np.asarray(x, dtype=np.float64)
    recon, caches = model_forward(m, x, train=True, dropout_prob=0.0)
    _, g = mse_loss(recon, x)
    grads = model_backward(m, caches, g)
    per_path = {}
    for path, p in m.parameters().items():
        numeric = np.empty_like(p)
        flat = p.reshape(-1)
        nflat = numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = _loss_at(m, x)
            flat[i] = orig - step
            lm = _loss_at(m, x)
            flat[i] = orig
            nflat[i] = (lp - lm) / (2.0 * step)
        per_path[path] = float(np.max(relative_error(grads[path], numeric, floor)))
    worst = max(per_path.values())
    return (worst, per_path) if report else worst
