"""Target functions for the separation experiment: a sinc ridge function and a radial annulus sum.

Fourier convention: ``F[g](xi) = integral g(t) exp(-i xi t) dt`` with
``sinc(u) = sin(u) / u``.  Under it the ridge profile
``(1/2pi) sqrt(4R/(1-delta)) sinc(W t)``, ``W = 2R/(1-delta)``, has spectrum
``sqrt((1-delta)/(4R))`` on ``|xi| <= W`` and zero outside, so its squared
spectrum carries mass ``1 - delta`` on ``|xi| <= 2R`` and 1 in total.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, RangeError
from .special import unit_ball_radius


def sinc(u):
    u = np.asarray(u, dtype=np.float64)
    safe = np.where(u == 0.0, 1.0, u)
    return np.where(u == 0.0, 1.0, np.sin(safe) / safe)


@dataclass(frozen=True)
class GipTarget:
    v: np.ndarray
    delta: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64).ravel()
        object.__setattr__(self, "v", v)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ConfigurationError(f"direction v must be a unit vector, |v| = {np.linalg.norm(v)!r}")
        if not 0.0 < self.delta < 1.0:
            raise RangeError(f"delta must lie in (0, 1), got {self.delta}")

    @classmethod
    def random(cls, d, delta, rng):
        v = rng.standard_normal(d)
        return cls(v / np.linalg.norm(v), delta)

    @property
    def d(self):
        return self.v.size

    @property
    def R_d(self):
        return unit_ball_radius(self.d)

    @property
    def bandwidth(self):
        return 2.0 * self.R_d / (1.0 - self.delta)

    @property
    def amplitude(self):
        return math.sqrt(4.0 * self.R_d / (1.0 - self.delta)) / (2.0 * math.pi)

    @property
    def spectrum_height(self):
        return math.sqrt((1.0 - self.delta) / (4.0 * self.R_d))


def g_ip_profile(t, target):
    """The 1-D ridge profile as a function of the projection ``t = x.v``."""
    return target.amplitude * sinc(target.bandwidth * np.asarray(t, dtype=np.float64))


def g_ip_eval(x, target):
    x = np.asarray(x, dtype=np.float64)
    return g_ip_profile(x @ target.v, target)


def g_ip_spectrum(xi, target):
    """Closed-form 1-D spectrum of the profile: a rectangle of height ``spectrum_height``."""
    xi = np.abs(np.asarray(xi, dtype=np.float64))
    return np.where(xi <= target.bandwidth, target.spectrum_height, 0.0)


def g_ip_spectrum_mass(target, band=None, order=64):
    """Gauss-Legendre integral of the squared spectrum over ``|xi| <= band`` (default ``2 R_d``).

    ``band=math.inf`` integrates over all frequencies.
    """
    band = 2.0 * target.R_d if band is None else float(band)
    if band <= 0:
        return 0.0
    # split at the spectral edge so each panel integrates a smooth piece;
    # beyond the edge the spectrum is identically zero, so an infinite band stops there
    edge = target.bandwidth
    panels = [(0.0, min(band, edge))]
    if math.isfinite(band) and band > edge:
        panels.append((edge, band))
    t, w = np.polynomial.legendre.leggauss(order)
    mass = 0.0
    for a, b in panels:
        xi = 0.5 * (b - a) * t + 0.5 * (a + b)
        mass += 0.5 * (b - a) * float(np.sum(w * g_ip_spectrum(xi, target) ** 2))
    return 2.0 * mass


@dataclass(frozen=True)
class RadialTarget:
    """Signed raised-cosine bumps on consecutive annuli ``[boundaries[i], boundaries[i+1]]``.

    Each bump is 1 in the annulus interior and ramps to 0 over ``ramp`` at both
    edges with a half-cosine; ``ramp`` equal to half the narrowest annulus gives
    a full raised cosine peaking only at the annulus centre.
    """

    boundaries: tuple
    signs: tuple
    ramp: float
    amplitude: float = 1.0

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        s = tuple(int(x) for x in self.signs)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "signs", s)
        if len(b) < 2 or any(hi <= lo for lo, hi in zip(b[:-1], b[1:])) or b[0] < 0:
            raise ConfigurationError(f"annulus boundaries must be non-negative and strictly increasing, got {b}")
        if len(s) != len(b) - 1 or any(x not in (-1, 1) for x in s):
            raise ConfigurationError("need one sign in {-1, +1} per annulus")
        narrowest = min(hi - lo for lo, hi in zip(b[:-1], b[1:]))
        if not 0.0 < self.ramp <= 0.5 * narrowest + 1e-15:
            raise ConfigurationError(f"ramp must lie in (0, {0.5 * narrowest}], got {self.ramp}")

    @classmethod
    def alternating(cls, d, n_annuli=4, inner=0.5, outer=2.0, ramp=None, amplitude=1.0):
        """``n_annuli`` equal-width annuli between ``inner * R_d`` and ``outer * R_d``, signs + - + ..."""
        R = unit_ball_radius(d)
        b = np.linspace(inner * R, outer * R, n_annuli + 1)
        half = 0.5 * (b[1] - b[0])
        return cls(tuple(b), tuple((-1) ** i for i in range(n_annuli)), half if ramp is None else ramp, amplitude)

    @property
    def centers(self):
        b = np.asarray(self.boundaries)
        return 0.5 * (b[:-1] + b[1:])


def radial_profile(r, target):
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    w = target.ramp
    for (lo, hi), s in zip(zip(target.boundaries[:-1], target.boundaries[1:]), target.signs):
        # distance inward from the nearest edge, clipped to the ramp
        depth = np.minimum(r - lo, hi - r)
        bump = np.where(depth <= 0, 0.0, np.where(depth >= w, 1.0, 0.5 - 0.5 * np.cos(math.pi * np.clip(depth, 0, w) / w)))
        out += s * bump
    return target.amplitude * out


def radial_target_eval(x, target):
    x = np.asarray(x, dtype=np.float64)
    return radial_profile(np.linalg.norm(x, axis=-1), target)
