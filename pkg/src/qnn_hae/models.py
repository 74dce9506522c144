"""Autoencoder topologies built from conventional and quadratic layers.

A model is two *stages* (encoder, decoder).  Each stage is a list of parallel
branches, each branch a list of layers; branch outputs are summed after their
activations.  Widths follow ``d -> ceil(d/2) -> ceil(d/4) -> ceil(d/2) -> d``,
and ``d -> 2d -> ceil(d/4) -> 2d -> d`` for the widened AE-X / AE-Y baselines.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import layers as L
from .errors import ConfigurationError, ShapeError, StateError
from .numerics import rng_stream

QUADRATIC_GROUPS = ("Wg", "bg", "Wb", "c")


class ModelKind(str, Enum):
    AE = "AE"
    QAE = "QAE"
    HAE_X = "HAE_X"
    HAE_Y = "HAE_Y"
    HAE_I = "HAE_I"
    # comparison baselines in the HAE-X / HAE-Y topologies
    AE_X = "AE_X"
    AE_Y = "AE_Y"
    QAE_X = "QAE_X"
    QAE_Y = "QAE_Y"

    @property
    def label(self):
        return self.value.replace("_", "-")

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(k.label.lower() for k in cls)
            raise ConfigurationError(f"unknown model kind {value!r}; valid kinds: {valid}") from None


# (encoder branches, decoder branches, widened); "C" conventional, "Q" quadratic
TOPOLOGIES = {
    ModelKind.AE: (["CC"], ["CC"], False),
    ModelKind.QAE: (["QQ"], ["QQ"], False),
    ModelKind.HAE_X: (["CC", "QQ"], ["CC", "QQ"], False),
    ModelKind.HAE_Y: (["CC", "QQ"], ["QQ"], False),
    ModelKind.HAE_I: (["QC"], ["CQ"], False),
    ModelKind.AE_X: (["CC", "CC"], ["CC", "CC"], True),
    ModelKind.AE_Y: (["CC", "CC"], ["CC"], True),
    ModelKind.QAE_X: (["QQ", "QQ"], ["QQ", "QQ"], False),
    ModelKind.QAE_Y: (["QQ", "QQ"], ["QQ"], False),
}


def layer_widths(d, widened=False):
    hidden = 2 * d if widened else math.ceil(d / 2)
    return [d, hidden, math.ceil(d / 4), hidden, d]


@dataclass
class AutoencoderModel:
    kind: ModelKind
    d: int
    encoder: list
    decoder: list
    seed: int = None
    norm_stats: dict = None
    meta: dict = field(default_factory=dict)

    @property
    def stages(self):
        return (("encoder", self.encoder), ("decoder", self.decoder))

    def layers(self):
        """Yield ``(path, layer)`` in a fixed order."""
        for stage_name, stage in self.stages:
            for bi, branch in enumerate(stage):
                for li, layer in enumerate(branch):
                    yield f"{stage_name}.{bi}.{li}", layer

    def parameters(self):
        """Mapping ``path -> array``; the arrays are the live parameter storage."""
        out = {}
        for path, layer in self.layers():
            for name, value in layer.params.items():
                out[f"{path}.{name}"] = value
        return out

    @property
    def bottleneck(self):
        return self.encoder[0][-1].fan_out


def _make_layer(code, n, m, act, rng):
    if code == "C":
        return L.Layer("conventional", L.conventional_init(n, m, rng), act)
    return L.Layer("quadratic", L.relinear_init(L.QuadraticParams.zeros(n, m), rng, n), act)


def build_model(kind, d, rng=None, seed=None):
    """Build a freshly initialized model; ``rng`` defaults to a stream from ``seed``."""
    kind = ModelKind.parse(kind)
    d = int(d)
    if d < 4:
        raise ConfigurationError(f"input dimension must be at least 4, got {d}")
    if rng is None:
        rng = rng_stream(0 if seed is None else seed)
    enc_codes, dec_codes, widened = TOPOLOGIES[kind]
    w = layer_widths(d, widened)

    def stage(codes, widths, last_act):
        branches = []
        for code in codes:
            branch = [
                _make_layer(code[0], widths[0], widths[1], L.RELU, rng),
                _make_layer(code[1], widths[1], widths[2], last_act, rng),
            ]
            branches.append(branch)
        return branches

    encoder = stage(enc_codes, w[0:3], L.RELU)
    decoder = stage(dec_codes, w[2:5], L.IDENTITY)
    return AutoencoderModel(kind, d, encoder, decoder, seed=seed)


def _run_branch(branch, h, train, dropout_prob, rng, index0):
    caches = []
    for li, layer in enumerate(branch):
        h, cache = layer.forward(h, train, index0 + li)
        mask = None
        # dropout only after the first hidden layer of each branch
        if li == 0 and train and dropout_prob > 0.0:
            h, mask = L.dropout(h, dropout_prob, rng, train=True)
        caches.append((cache, mask))
    return h, caches


def model_forward(m, x, train=False, dropout_prob=0.0, rng=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.d:
        raise ShapeError(f"model expects input of shape (B, {m.d}), got {x.shape}")
    h = x
    caches = [] if train else None
    index = 0
    for _, stage in m.stages:
        outs = []
        stage_caches = []
        for branch in stage:
            out, bc = _run_branch(branch, h, train, dropout_prob, rng, index)
            index += len(branch)
            outs.append(out)
            stage_caches.append(bc)
        h = outs[0] if len(outs) == 1 else sum(outs[1:], outs[0])
        if train:
            caches.append(stage_caches)
    return h, caches


def model_backward(m, caches, grad_out):
    if caches is None:
        raise StateError("model_backward needs caches from a train-mode model_forward")
    grads = {}
    g = np.asarray(grad_out, dtype=np.float64)
    for (stage_name, stage), stage_caches in reversed(list(zip(m.stages, caches))):
        gin_total = None
        for bi, (branch, bc) in enumerate(zip(stage, stage_caches)):
            gb = g
            for li in reversed(range(len(branch))):
                cache, mask = bc[li]
                if mask is not None:
                    gb = gb * mask
                lg, gb = branch[li].backward(cache, gb)
                for name, value in lg.items():
                    grads[f"{stage_name}.{bi}.{li}.{name}"] = value
            gin_total = gb if gin_total is None else gin_total + gb
        g = gin_total
    return grads


def layer_param_count(layer):
    n, m = layer.fan_in, layer.fan_out
    return m * (3 * n + 3) if layer.kind == "quadratic" else m * (n + 1)


def layer_flops(layer):
    n, m = layer.fan_in, layer.fan_out
    if layer.kind == "quadratic":
        return 3 * (2 * n * m) + n + 4 * m
    return 2 * n * m + m


def count_params(m):
    return sum(layer_param_count(layer) for _, layer in m.layers())


def count_flops(m):
    """Per-sample multiply and add count over all layers (branch fusion adds excluded)."""
    return sum(layer_flops(layer) for _, layer in m.layers())


# ---- checkpoints


def _layer_to_dict(layer):
    return {
        "kind": layer.kind,
        "activation": layer.activation,
        "params": {k: v.tolist() for k, v in layer.params.items()},
    }


def _layer_from_dict(doc):
    cls = L.QuadraticParams if doc["kind"] == "quadratic" else L.ConventionalParams
    params = cls(**{k: np.asarray(doc["params"][k], dtype=np.float64) for k in cls.names()})
    return L.Layer(doc["kind"], params, doc["activation"])


def model_to_dict(m):
    return {
        "format": "qnn-hae-checkpoint",
        "version": 1,
        "kind": m.kind.value,
        "d": m.d,
        "seed": m.seed,
        "norm_stats": m.norm_stats,
        "encoder": [[_layer_to_dict(layer) for layer in branch] for branch in m.encoder],
        "decoder": [[_layer_to_dict(layer) for layer in branch] for branch in m.decoder],
        "meta": m.meta,
    }


def model_from_dict(doc):
    if doc.get("format") != "qnn-hae-checkpoint":
        raise ConfigurationError("not a qnn-hae checkpoint document")
    return AutoencoderModel(
        kind=ModelKind.parse(doc["kind"]),
        d=int(doc["d"]),
        encoder=[[_layer_from_dict(x) for x in branch] for branch in doc["encoder"]],
        decoder=[[_layer_from_dict(x) for x in branch] for branch in doc["decoder"]],
        seed=doc.get("seed"),
        norm_stats=doc.get("norm_stats"),
        meta=doc.get("meta") or {},
    )


def save_checkpoint(m, path):
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(m), indent=None, sort_keys=True))
    return path


def load_checkpoint(path):
    return model_from_dict(json.loads(Path(path).read_text()))
