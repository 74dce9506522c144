"""Unit-volume ball geometry, Bessel functions of the first kind, and the radial bump phi.

``phi`` is the Fourier transform of the indicator of the unit-volume ball
(transform kernel ``exp(-2 pi i x.w)``), so ``phi(0) = 1`` and its squared
L2 norm is 1.
"""

import math

import numpy as np

from ..errors import RangeError

SERIES_MAX_Z = 12.0


def ball_volume(d, radius=1.0):
    """Volume of the ``d``-ball, ``pi^(d/2) r^d / Gamma(d/2 + 1)``."""
    if d < 1:
        raise RangeError(f"dimension must be >= 1, got {d}")
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)) * radius**d


def sphere_area(d):
    """Surface area of the unit sphere in R^d, ``2 pi^(d/2) / Gamma(d/2)``."""
    return 2.0 * math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d))


def unit_ball_radius(d):
    """Radius ``R_d`` of the d-ball with volume 1."""
    if d < 1:
        raise RangeError(f"dimension must be >= 1, got {d}")
    return math.exp(math.lgamma(0.5 * d + 1.0) / d) / math.sqrt(math.pi)


def _check_order(order):
    nu = float(order)
    if nu < 0:
        raise RangeError(f"Bessel order must be >= 0, got {order}")
    if not (2.0 * nu).is_integer():
        raise RangeError(f"Bessel order must be an integer or half-integer, got {order}")
    return nu


def _series_scaled(nu, z):
    """``J_nu(z) / z^nu`` by the ascending series; finite at z = 0."""
    q = -0.25 * z * z
    term = np.full_like(z, math.exp(-nu * math.log(2.0) - math.lgamma(nu + 1.0)))
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total += term
        if k > 0.5 * float(np.max(z, initial=0.0)) and np.all(np.abs(term) < 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
        if k > 400:
            break
    return total


def _hankel(nu, z):
    """Large-argument expansion of ``J_nu(z)``, truncated at its smallest term."""
    mu = 4.0 * nu * nu
    p = np.ones_like(z)
    q = np.zeros_like(z)
    a = np.ones_like(z)
    smallest = np.ones_like(z)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, 60):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(a)
        live &= mag < smallest
        smallest = np.where(live, mag, smallest)
        contrib = np.where(live, a, 0.0)
        # a_k enters P (even k) or Q (odd k) with alternating sign per pair
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * contrib
        else:
            q += sign * contrib
        if not live.any():
            break
    w = z - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(w) - q * np.sin(w))


def _upward(nu, z):
    """``J_nu`` for ``z > SERIES_MAX_Z`` and ``z >= nu`` by recurrence from two seed orders."""
    if float(nu).is_integer():
        lo, j_prev, j_cur = 0.0, _hankel(0.0, z), _hankel(1.0, z)
        if nu == 0.0:
            return j_prev
    else:
        s = np.sqrt(2.0 / (math.pi * z))
        lo, j_prev, j_cur = -0.5, s * np.cos(z), s * np.sin(z)
    order = lo + 1.0
    while order < nu:
        j_prev, j_cur = j_cur, (2.0 * order / z) * j_cur - j_prev
        order += 1.0
    return j_cur


def bessel_j(order, z):
    """Bessel function of the first kind ``J_order(z)`` for integer or half-integer ``order >= 0``, ``z >= 0``."""
    nu = _check_order(order)
    arr = np.asarray(z, dtype=np.float64)
    zz = np.atleast_1d(arr)
    if np.any(zz < 0):
        raise RangeError("bessel_j needs z >= 0")
    out = np.empty_like(zz)
    use_series = (zz <= SERIES_MAX_Z) | (zz < nu)
    if use_series.any():
        zs = zz[use_series]
        out[use_series] = _series_scaled(nu, zs) * zs**nu
    if (~use_series).any():
        out[~use_series] = _upward(nu, zz[~use_series])
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def bessel_j_scaled(order, z):
    """``J_order(z) / z^order``, with the series limit at z = 0."""
    nu = _check_order(order)
    arr = np.asarray(z, dtype=np.float64)
    zz = np.atleast_1d(arr)
    if np.any(zz < 0):
        raise RangeError("bessel_j_scaled needs z >= 0")
    out = np.empty_like(zz)
    use_series = (zz <= SERIES_MAX_Z) | (zz < nu)
    if use_series.any():
        out[use_series] = _series_scaled(nu, zz[use_series])
    if (~use_series).any():
        zl = zz[~use_series]
        out[~use_series] = _upward(nu, zl) / zl**nu
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def phi_radial(r, d):
    """``phi`` as a function of the norm ``r``; ``phi(0) = 1``."""
    R = unit_ball_radius(d)
    nu = 0.5 * d
    z = 2.0 * math.pi * R * np.asarray(r, dtype=np.float64)
    # (R/r)^nu J_nu(2 pi R r) == (2 pi R^2)^nu * J_nu(z) / z^nu
    return (2.0 * math.pi * R * R) ** nu * bessel_j_scaled(nu, z)


def phi_eval(x, d):
    """``phi(x) = (R_d/|x|)^(d/2) J_(d/2)(2 pi R_d |x|)``; accepts one point or rows of points."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != d:
        raise RangeError(f"points must have {d} coordinates, got shape {x.shape}")
    return phi_radial(np.linalg.norm(x, axis=-1), d)


def phi_l2_mass(d, cutoff=None, nodes=20000):
    """Radial quadrature of the integral of ``phi^2`` over R^d (should be 1).

    The oscillatory tail beyond ``cutoff`` uses the asymptotic average
    ``phi^2 r^(d-1) ~ R^(d-1) / (2 pi^2 r^2)``.
    """
    R = unit_ball_radius(d)
    cutoff = cutoff if cutoff is not None else 200.0 * R
    # Gauss-Legendre on unit-length panels keeps the oscillation resolved
    panels = int(math.ceil(cutoff / (0.25 / R)))
    per_panel = max(8, nodes // panels)
    t, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(0.0, cutoff, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (b - a) * t + 0.5 * (a + b)).ravel()
    wr = (0.5 * (b - a) * w).ravel()
    body = np.sum(wr * phi_radial(r, d) ** 2 * r ** (d - 1))
    tail = R ** (d - 1) / (2.0 * math.pi**2 * cutoff)
    return sphere_area(d) * (body + tail)
