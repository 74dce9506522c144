"""One-hidden-layer ReLU networks: ridge units, radial units ``relu(b |x|^2 + c)``, and their union.

The ridge unit ``a relu(b x.v + c)`` is stored with ``w = b v`` merged, which
spans the same function class.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError, FitError, RangeError
from ..numerics import child_stream, rng_stream
from .measures import MeasureKind, sample_measure

CONVENTIONAL = "conventional"
QUADRATIC_RADIAL = "quadratic_radial"
HETEROGENEOUS = "heterogeneous"
FAMILIES = (CONVENTIONAL, QUADRATIC_RADIAL, HETEROGENEOUS)


def split_width(family, k):
    """``(ridge units, radial units)`` for a width-``k`` net."""
    if family == CONVENTIONAL:
        return k, 0
    if family == QUADRATIC_RADIAL:
        return 0, k
    if family == HETEROGENEOUS:
        return (k + 1) // 2, k // 2
    raise ConfigurationError(f"unknown family {family!r}; valid: {', '.join(FAMILIES)}")


@dataclass
class ShallowNet:
    family: str
    width: int
    d: int
    params: dict
    meta: dict = field(default_factory=dict)

    @property
    def n_params(self):
        return int(sum(p.size for p in self.params.values()))

    def _parts(self, x):
        x = np.asarray(x, dtype=np.float64)
        parts = {}
        if "W" in self.params:
            parts["ridge"] = x @ self.params["W"].T + self.params["c"]
        if "b" in self.params:
            r2 = np.sum(x * x, axis=1)
            parts["radial"] = r2[:, None] * self.params["b"] + self.params["c_r"]
            parts["r2"] = r2
        return parts

    def predict(self, x):
        parts = self._parts(x)
        out = np.zeros(np.asarray(x).shape[0])
        if "ridge" in parts:
            out += np.maximum(parts["ridge"], 0.0) @ self.params["a"]
        if "radial" in parts:
            out += np.maximum(parts["radial"], 0.0) @ self.params["a_r"]
        return out

    __call__ = predict

    def loss_and_grad(self, x, y):
        """Mean squared error against ``y`` and its gradient for every parameter array."""
        x = np.asarray(x, dtype=np.float64)
        parts = self._parts(x)
        n = x.shape[0]
        out = np.zeros(n)
        acts = {}
        if "ridge" in parts:
            acts["ridge"] = np.maximum(parts["ridge"], 0.0)
            out += acts["ridge"] @ self.params["a"]
        if "radial" in parts:
            acts["radial"] = np.maximum(parts["radial"], 0.0)
            out += acts["radial"] @ self.params["a_r"]
        err = out - y
        loss = float(np.mean(err * err))
        g = 2.0 * err / n
        grads = {}
        if "ridge" in parts:
            grads["a"] = acts["ridge"].T @ g
            gh = np.outer(g, self.params["a"]) * (parts["ridge"] > 0)
            grads["W"] = gh.T @ x
            grads["c"] = gh.sum(axis=0)
        if "radial" in parts:
            grads["a_r"] = acts["radial"].T @ g
            gq = np.outer(g, self.params["a_r"]) * (parts["radial"] > 0)
            grads["b"] = gq.T @ parts["r2"]
            grads["c_r"] = gq.sum(axis=0)
        return loss, grads


def hidden_features(net, x):
    """Post-activation hidden units, ridge units first, as an ``(n, k)`` matrix."""
    parts = net._parts(x)
    cols = [np.maximum(parts[key], 0.0) for key in ("ridge", "radial") if key in parts]
    return np.hstack(cols)


def refit_readout(net, x, y, ridge=1e-8):
    """Replace the output weights by the ridge-regularized least-squares solution on ``(x, y)``."""
    h = hidden_features(net, x)
    gram = h.T @ h
    gram[np.diag_indices_from(gram)] += ridge * max(float(np.trace(gram)) / gram.shape[0], 1e-12)
    coef = np.linalg.solve(gram, h.T @ np.asarray(y, dtype=np.float64))
    k_ridge = net.params["a"].size if "a" in net.params else 0
    if k_ridge:
        net.params["a"] = coef[:k_ridge].copy()
    if "a_r" in net.params:
        net.params["a_r"] = coef[k_ridge:].copy()
    return net


def init_shallow(family, k, d, rng, x_ref):
    """Random init with every hinge placed through a randomly chosen reference point."""
    if k < 1:
        raise RangeError(f"width must be >= 1, got {k}")
    x_ref = np.asarray(x_ref, dtype=np.float64)
    k_ridge, k_rad = split_width(family, k)
    scale = float(np.sqrt(np.mean(np.sum(x_ref * x_ref, axis=1)))) or 1.0
    params = {}
    if k_ridge:
        v = rng.standard_normal((k_ridge, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        w = v * (math.sqrt(d) / scale) * rng.uniform(0.5, 1.5, (k_ridge, 1))
        anchors = x_ref[rng.integers(0, x_ref.shape[0], k_ridge)]
        params["W"] = w
        params["c"] = -np.sum(w * anchors, axis=1)
        params["a"] = rng.standard_normal(k_ridge) / math.sqrt(k)
    if k_rad:
        r2 = np.sum(x_ref * x_ref, axis=1)
        spread = float(np.std(r2)) or 1.0
        b = rng.choice([-1.0, 1.0], k_rad) * rng.uniform(0.5, 1.5, k_rad) / spread
        params["b"] = b
        params["c_r"] = -b * r2[rng.integers(0, r2.size, k_rad)]
        params["a_r"] = rng.standard_normal(k_rad) / math.sqrt(k)
    return ShallowNet(family, int(k), int(d), params)


def embed_net(net, k, rng, x_ref):
    """A width-``k`` net of the same family computing exactly ``net``: new units get zero output weight."""
    if k < net.width:
        raise RangeError(f"cannot embed width {net.width} into narrower width {k}")
    wide = init_shallow(net.family, k, net.d, rng, x_ref)
    for out_key, unit_keys in (("a", ("W", "c")), ("a_r", ("b", "c_r"))):
        if out_key not in net.params:
            continue
        n_old = net.params[out_key].size
        for key in unit_keys:
            wide.params[key][:n_old] = net.params[key]
        wide.params[out_key][:] = 0.0
        wide.params[out_key][:n_old] = net.params[out_key]
    return wide


def count_shallow_params(family, k, d):
    k_ridge, k_rad = split_width(family, k)
    return k_ridge * (d + 2) + 3 * k_rad


@dataclass(frozen=True)
class FitConfig:
    steps: int = 3000
    batch_size: int = 256
    learning_rate: float = 1e-2
    final_lr_fraction: float = 0.01
    restarts: int = 3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1 or self.restarts < 1:
            raise ConfigurationError("steps, batch_size and restarts must all be >= 1")
        if not self.learning_rate > 0 or not 0 < self.final_lr_fraction <= 1:
            raise ConfigurationError("learning_rate must be > 0 and final_lr_fraction in (0, 1]")

    def replace(self, **changes):
        return replace(self, **changes)


def _adam_fit(net, x, y, cfg, rng):
    m = {k: np.zeros_like(v) for k, v in net.params.items()}
    s = {k: np.zeros_like(v) for k, v in net.params.items()}
    n = x.shape[0]
    bs = min(cfg.batch_size, n)
    for t in range(1, cfg.steps + 1):
        idx = rng.integers(0, n, bs)
        loss, grads = net.loss_and_grad(x[idx], y[idx])
        if not math.isfinite(loss):
            return False
        # cosine decay from learning_rate down to learning_rate * final_lr_fraction
        frac = cfg.final_lr_fraction + (1 - cfg.final_lr_fraction) * 0.5 * (1 + math.cos(math.pi * (t - 1) / cfg.steps))
        lr = cfg.learning_rate * frac
        bc1 = 1 - cfg.beta1**t
        bc2 = 1 - cfg.beta2**t
        for k, p in net.params.items():
            g = grads[k]
            m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g
            s[k] = cfg.beta2 * s[k] + (1 - cfg.beta2) * g * g
            p -= lr * (m[k] / bc1) / (np.sqrt(s[k] / bc2) + cfg.eps)
    return all(np.all(np.isfinite(p)) for p in net.params.values())


def fit_shallow(
    family, k, target, measure, n_samples, cfg=None, d=None, rng=None, train_x=None, test_x=None, warm_start=None
):
    """Fit a width-``k`` net of ``family`` to ``target`` by Adam; returns ``(net, held-out MSE)``.

    ``target`` maps an ``(n, d)`` array to ``n`` values.  Training and held-out
    sets of ``n_samples`` points come from ``measure`` unless given.  The best of
    ``cfg.restarts`` restarts (by held-out error) is kept; ``net.meta`` records
    the relative error ``MSE / E[target^2]`` and every restart's error.

    ``warm_start`` (a narrower net of the same family) adds two candidates: the
    narrower net embedded unchanged, and that embedding trained further.  With
    it the kept error can never exceed the narrower net's.
    """
    cfg = cfg or FitConfig()
    measure = measure or MeasureKind()
    rng = rng if rng is not None else rng_stream(0)
    if d is None:
        if train_x is None:
            raise ConfigurationError("pass d or explicit sample points")
        d = np.asarray(train_x).shape[1]
    n_params = count_shallow_params(family, k, d)
    if n_samples < 10 * n_params:
        raise ConfigurationError(f"n_samples={n_samples} is below 10 x {n_params} parameters")
    if train_x is None:
        train_x = sample_measure(measure, d, n_samples, child_stream(rng, 0))
    if test_x is None:
        test_x = sample_measure(measure, d, n_samples, child_stream(rng, 1))
    train_y = np.asarray(target(train_x), dtype=np.float64)
    test_y = np.asarray(target(test_x), dtype=np.float64)
    second_moment = float(np.mean(test_y * test_y))
    best, best_err, errors = None, math.inf, []

    def consider(net, ok):
        nonlocal best, best_err
        with np.errstate(over="ignore", invalid="ignore"):
            err = float(np.mean((net.predict(test_x) - test_y) ** 2)) if ok else math.inf
        if not math.isfinite(err):
            err = math.inf
        errors.append(err)
        if err < best_err:
            best, best_err = net, err

    if warm_start is not None:
        if warm_start.family != family or warm_start.d != d:
            raise ConfigurationError("warm_start must be a net of the same family and input dimension")
        consider(embed_net(warm_start, k, child_stream(rng, 5), train_x), True)
    candidates = [(child_stream(rng, 10 + i), None) for i in range(cfg.restarts)]
    if warm_start is not None:
        candidates.append((child_stream(rng, 6), warm_start))
    for r, start in candidates:
        with np.errstate(over="ignore", invalid="ignore"):
            if start is None:
                net = init_shallow(family, k, d, r, train_x)
                # the readout is linear given the hidden units: solve it exactly before Adam
                refit_readout(net, train_x, train_y)
            else:
                net = embed_net(start, k, r, train_x)
            ok = _adam_fit(net, train_x, train_y, cfg, r)
            if ok:
                refit_readout(net, train_x, train_y)
                ok = all(np.all(np.isfinite(p)) for p in net.params.values())
        consider(net, ok)
    if best is None:
        raise FitError(f"all {cfg.restarts} restarts diverged for {family} width {k}")
    best.meta = {
        "heldout_mse": best_err,
        "target_second_moment": second_moment,
        "relative_error": best_err / second_moment if second_moment > 0 else best_err,
        "restart_errors": errors,
    }
    return best, best_err
