"""Sampling measures: uniform on a ball, and the density phi^2 by rejection."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, RangeError, SamplerStallError
from .special import phi_eval, unit_ball_radius

UNIFORM_BALL = "uniform_ball"
MU_PHI_SQUARED = "mu_phi_squared"

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class MeasureKind:
    """``name`` is ``uniform_ball`` (with ``radius``) or ``mu_phi_squared`` (with proposal radius ``r_max``).

    ``None`` radii default to ``2 R_d`` and ``3 R_d`` respectively.
    """

    name: str = UNIFORM_BALL
    radius: float = None
    r_max: float = None

    def __post_init__(self):
        if self.name not in (UNIFORM_BALL, MU_PHI_SQUARED):
            raise ConfigurationError(f"unknown measure {self.name!r}; use {UNIFORM_BALL} or {MU_PHI_SQUARED}")
        for field_name in ("radius", "r_max"):
            value = getattr(self, field_name)
            if value is not None and not value > 0:
                raise ConfigurationError(f"{field_name} must be > 0, got {value}")

    def support_radius(self, d):
        if self.name == UNIFORM_BALL:
            return self.radius if self.radius is not None else 2.0 * unit_ball_radius(d)
        return self.r_max if self.r_max is not None else 3.0 * unit_ball_radius(d)


def uniform_ball(d, n, radius, rng):
    direction = rng.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return direction * r[:, None]


def _rejection_phi2(d, n, r_max, rng):
    # phi^2 <= phi(0)^2 = 1, so phi^2 itself is the acceptance probability
    batch = max(1024, 4 * n)
    accepted = []
    have = 0
    proposed = 0
    while have < n:
        pts = uniform_ball(d, batch, r_max, rng)
        keep = pts[rng.random(batch) < phi_eval(pts, d) ** 2]
        proposed += batch
        accepted.append(keep)
        have += keep.shape[0]
        if proposed >= 100_000 and have / proposed < MIN_ACCEPTANCE:
            raise SamplerStallError(
                f"rejection sampler for phi^2 stalled in d={d}: acceptance {have / proposed:.2e} < {MIN_ACCEPTANCE:g}; "
                "use a smaller proposal radius, a lower dimension, or the uniform_ball measure"
            )
    return np.concatenate(accepted)[:n]


def sample_measure(kind, d, n, rng):
    if n < 1:
        raise RangeError(f"need n >= 1 samples, got {n}")
    if d < 1:
        raise RangeError(f"dimension must be >= 1, got {d}")
    if kind.name == UNIFORM_BALL:
        return uniform_ball(d, n, kind.support_radius(d), rng)
    return _rejection_phi2(d, n, kind.support_radius(d), rng)


def expected_norm_uniform(d, radius):
    """``E|x|`` under the uniform ball: ``d / (d + 1) * radius``."""
    return d / (d + 1.0) * radius

