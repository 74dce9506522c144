"""Finite-difference suites over single layers and whole models."""

import numpy as np

from . import layers as L
from .models import ModelKind, build_model
from .numerics import rng_stream
from .training import gradient_check, relative_error

LAYER_TOLERANCE = 1e-5
MODEL_TOLERANCE = 1e-4
STEP_RANGE = (1e-7, 1e-4)


def _random_layer(kind, n, m, rng):
    if kind == "quadratic":
        shapes = L.QuadraticParams.zeros(n, m)
        params = L.QuadraticParams(**{k: rng.uniform(-1, 1, v.shape) for k, v in shapes.items()})
    else:
        params = L.ConventionalParams(rng.uniform(-1, 1, (n, m)), rng.uniform(-1, 1, m))
    return params


def _forward(kind, x, params, act):
    fn = L.quadratic_forward if kind == "quadratic" else L.conventional_forward
    return fn(x, params, act, train=True)


def _backward(kind, cache, params, gout):
    fn = L.quadratic_backward if kind == "quadratic" else L.conventional_backward
    return fn(cache, params, gout)


def layer_gradient_check(kind, n, m, act, step=1e-6, seed=0, batch=5, kink_margin=1e-3):
    """Worst relative error per parameter group (plus ``x``) for the scalar loss ``sum(out * G)``.

    ReLU samples whose pre-activation sits within ``kink_margin`` of 0 are
    dropped so the check never straddles the kink.
    """
    rng = rng_stream(seed, 7)
    params = _random_layer(kind, n, m, rng)
    x = rng.uniform(-1, 1, (batch, n))
    G = rng.uniform(-1, 1, (batch, m))
    _, cache = _forward(kind, x, params, act)
    if act == L.RELU:
        keep = np.all(np.abs(cache.pre) > kink_margin, axis=1)
        x, G = x[keep], G[keep]
        _, cache = _forward(kind, x, params, act)
    grads, gin = _backward(kind, cache, params, G)

    def out():
        return _forward(kind, x, params, act)[0]

    report = {}
    targets = dict(params.items())
    targets["x"] = x
    analytic = dict(grads.items())
    analytic["x"] = gin
    for name, arr in targets.items():
        numeric = np.empty_like(arr)
        flat, nflat = arr.reshape(-1), numeric.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            op = out()
            flat[i] = orig - step
            om = out()
            flat[i] = orig
            # differencing outputs before the reduction keeps untouched columns from adding roundoff
            nflat[i] = np.sum((op - om) * G) / (2.0 * step)
        report[name] = float(np.max(relative_error(analytic[name], numeric))) if arr.size else 0.0
    return report


def run_suites(step=1e-6, d=6, sizes=((1, 1), (3, 8), (8, 3), (16, 16)), kinds=None, seed=0):
    """Every layer kind x activation x size, then every model kind at input width ``d``.

    Returns ``(ok, results)``; each result has ``suite, path, error, tolerance, passed``.
    """
    results = []
    for kind in ("conventional", "quadratic"):
        for act in (L.IDENTITY, L.RELU):
            for n, m in sizes:
                for name, err in layer_gradient_check(kind, n, m, act, step, seed).items():
                    results.append(
                        {"suite": "layer", "path": f"{kind}[{act},{n}x{m}].{name}", "error": err,
                         "tolerance": LAYER_TOLERANCE, "passed": err < LAYER_TOLERANCE}
                    )
    rng = rng_stream(seed, 8)
    x = rng.uniform(0, 1, (4, d))
    for kind in kinds or list(ModelKind):
        kind = ModelKind.parse(kind)
        m = build_model(kind, d, seed=seed)
        # perturb off the ReLinear point so the quadratic terms get non-trivial gradients
        for p in m.parameters().values():
            p += rng.uniform(-0.1, 0.1, p.shape)
        _, per_path = gradient_check(m, x, step=step, report=True)
        for path, err in per_path.items():
            results.append(
                {"suite": f"model:{kind.label}", "path": path, "error": err,
                 "tolerance": MODEL_TOLERANCE, "passed": err < MODEL_TOLERANCE}
            )
    return all(r["passed"] for r in results), results
