"""Dense conventional and quadratic layers with hand-written gradients.

A quadratic unit computes

    act((x . wr + br) * (x . wg + bg) + (x * x) . wb + c)

and its backward pass uses

    d/dwr = x (x . wg + bg)      d/dbr = x . wg + bg
    d/dwg = x (x . wr + br)      d/dbg = x . wr + br
    d/dwb = x * x                d/dc  = 1
    d/dx  = wr (x . wg + bg) + wg (x . wr + br) + 2 wb * x

each multiplied by ``act'(pre)``.  Gradients are summed over the batch.
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import NumericOverflowError, RangeError, ShapeError, StateError

RELU = "relu"
IDENTITY = "identity"
ACTIVATIONS = (RELU, IDENTITY)


def activate(pre, act):
    if act == RELU:
        return np.maximum(pre, 0.0)
    if act == IDENTITY:
        return pre
    raise ValueError(f"unknown activation {act!r}")


def activation_grad(pre, act):
    # ReLU subgradient at 0 is 0
    if act == RELU:
        return (pre > 0.0).astype(pre.dtype)
    if act == IDENTITY:
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {act!r}")


class _Params:
    """Shared helpers for the parameter dataclasses."""

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))

    def items(self):
        return [(name, getattr(self, name)) for name in self.names()]

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.items()})

    def size(self):
        return sum(v.size for _, v in self.items())

    def check_finite(self):
        return all(np.all(np.isfinite(v)) for _, v in self.items())


@dataclass
class QuadraticParams(_Params):
    Wr: np.ndarray
    br: np.ndarray
    Wg: np.ndarray
    bg: np.ndarray
    Wb: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        n, m = np.shape(self.Wr)
        for name, value in self.items():
            expected = (n, m) if name.startswith("W") else (m,)
            if np.shape(value) != expected:
                raise ShapeError(f"quadratic parameter {name} has shape {np.shape(value)}, expected {expected}")

    @classmethod
    def zeros(cls, n, m):
        return cls(*(np.zeros((n, m)) if k.startswith("W") else np.zeros(m) for k in cls.names()))

    @property
    def fan_in(self):
        return self.Wr.shape[0]

    @property
    def fan_out(self):
        return self.Wr.shape[1]


@dataclass
class ConventionalParams(_Params):
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if np.ndim(self.W) != 2 or np.shape(self.b) != (np.shape(self.W)[1],):
            raise ShapeError(f"conventional parameters W{np.shape(self.W)} and b{np.shape(self.b)} disagree")

    @classmethod
    def zeros(cls, n, m):
        return cls(np.zeros((n, m)), np.zeros(m))

    @property
    def fan_in(self):
        return self.W.shape[0]

    @property
    def fan_out(self):
        return self.W.shape[1]


@dataclass
class LayerCache:
    x: np.ndarray
    pre: np.ndarray
    act: str
    # quadratic layers only: the two inner-product branches
    r: np.ndarray = None
    g: np.ndarray = None


def _check_input(x, n, layer_index):
    if x.ndim != 2 or x.shape[1] != n:
        raise ShapeError(f"layer {layer_index}: input shape {x.shape} does not match fan-in {n}")


def _check_pre(pre, layer_index):
    if not np.all(np.isfinite(pre)):
        raise NumericOverflowError(f"non-finite pre-activation in layer {layer_index}", layer_index=layer_index)


def quadratic_forward(x, p, act=IDENTITY, train=False, layer_index=0):
    x = np.asarray(x, dtype=np.float64)
    _check_input(x, p.fan_in, layer_index)
    # overflow is detected and reported by _check_pre
    with np.errstate(over="ignore", invalid="ignore"):
        r = x @ p.Wr + p.br
        g = x @ p.Wg + p.bg
        pre = r * g + (x * x) @ p.Wb + p.c
    _check_pre(pre, layer_index)
    cache = LayerCache(x, pre, act, r, g) if train else None
    return activate(pre, act), cache


def quadratic_backward(cache, p, gout):
    if cache is None or cache.r is None:
        raise StateError("quadratic_backward needs a cache from a train-mode quadratic_forward")
    x = cache.x
    gpre = gout * activation_grad(cache.pre, cache.act)
    gr = gpre * cache.g
    gg = gpre * cache.r
    grads = QuadraticParams(
        Wr=x.T @ gr,
        br=gr.sum(axis=0),
        Wg=x.T @ gg,
        bg=gg.sum(axis=0),
        Wb=(x * x).T @ gpre,
        c=gpre.sum(axis=0),
    )
    gin = gr @ p.Wr.T + gg @ p.Wg.T + 2.0 * x * (gpre @ p.Wb.T)
    return grads, gin


def conventional_forward(x, p, act=IDENTITY, train=False, layer_index=0):
    x = np.asarray(x, dtype=np.float64)
    _check_input(x, p.fan_in, layer_index)
    with np.errstate(over="ignore", invalid="ignore"):
        pre = x @ p.W + p.b
    _check_pre(pre, layer_index)
    cache = LayerCache(x, pre, act) if train else None
    return activate(pre, act), cache


def conventional_backward(cache, p, gout):
    if cache is None:
        raise StateError("conventional_backward needs a cache from a train-mode conventional_forward")
    gpre = gout * activation_grad(cache.pre, cache.act)
    grads = ConventionalParams(W=cache.x.T @ gpre, b=gpre.sum(axis=0))
    return grads, gpre @ p.W.T


def dropout(x, prob, rng=None, train=False):
    """Inverted dropout; returns ``(output, mask)`` with the mask already scaled."""
    if not 0.0 <= prob < 1.0:
        raise RangeError(f"dropout probability must lie in [0, 1), got {prob}")
    if not train or prob == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise StateError("train-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= prob) / (1.0 - prob)
    return x * mask, mask


def conventional_init(n, m, rng):
    bound = 1.0 / np.sqrt(n)
    return ConventionalParams(W=rng.uniform(-bound, bound, (n, m)), b=rng.uniform(-bound, bound, m))


def relinear_init(p, rng, fan_in=None):
    """ReLinear start: the quadratic unit reduces to the conventional one on ``(Wr, br)``."""
    n, m = p.fan_in, p.fan_out
    bound = 1.0 / np.sqrt(fan_in or n)
    # same draw order as conventional_init, so equal seeds give equal (Wr, br) and (W, b)
    return QuadraticParams(
        Wr=rng.uniform(-bound, bound, (n, m)),
        br=rng.uniform(-bound, bound, m),
        Wg=np.zeros((n, m)),
        bg=np.ones(m),
        Wb=np.zeros((n, m)),
        c=np.zeros(m),
    )


@dataclass
class Layer:
    """One dense layer inside a model: ``kind`` is ``"quadratic"`` or ``"conventional"``."""

    kind: str
    params: object
    activation: str = RELU

    def forward(self, x, train=False, layer_index=0):
        fn = quadratic_forward if self.kind == "quadratic" else conventional_forward
        return fn(x, self.params, self.activation, train, layer_index)

    def backward(self, cache, gout):
        fn = quadratic_backward if self.kind == "quadratic" else conventional_backward
        return fn(cache, self.params, gout)

    @property
    def fan_in(self):
        return self.params.fan_in

    @property
    def fan_out(self):
        return self.params.fan_out
