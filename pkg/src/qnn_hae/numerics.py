"""Dense float64 arithmetic and seeded random streams.

Matrices are plain ``numpy.ndarray`` objects in row-major, one-sample-per-row
layout.  Random streams are ``numpy.random.Generator`` instances built from a
``SeedSequence``; child streams are keyed by integer stream ids so parallel
jobs never share state.
"""

import numpy as np

from .errors import NumericOverflowError, RangeError, ShapeError

DTYPE = np.float64


def as_matrix(a, name="array"):
    """Return ``a`` as a 2-D float64 array, promoting vectors to one row."""
    m = np.asarray(a, dtype=DTYPE)
    if m.ndim == 1:
        m = m[np.newaxis, :]
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 1-D or 2-D, got shape {m.shape}")
    return m


def check_finite(a, what="result"):
    if not np.all(np.isfinite(a)):
        raise NumericOverflowError(f"{what} contains non-finite values")
    return a


def matmul(a, b):
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    return check_finite(out, "matmul result")


def hadamard(a, b):
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard operands differ in shape: {a.shape} vs {b.shape}")
    return a * b


def rng_stream(seed, *stream_ids):
    """Generator for ``(seed, *stream_ids)``; distinct ids give independent streams."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in stream_ids))
    return np.random.Generator(np.random.PCG64(ss))


def child_stream(rng, stream_id):
    """Derive an independent child generator from ``rng`` without advancing it."""
    ss = rng.bit_generator.seed_seq
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(stream_id),))
    return np.random.Generator(np.random.PCG64(child))


def uniform(rng, lo, hi, n):
    if not lo < hi:
        raise RangeError(f"uniform range requires lo < hi, got [{lo}, {hi})")
    return rng.uniform(lo, hi, size=n)
