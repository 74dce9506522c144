import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp
from scipy.integrate import trapezoid

from qnn_hae.errors import ConfigurationError, RangeError, SamplerStallError
from qnn_hae.numerics import rng_stream
from qnn_hae.theory import (
    CONVENTIONAL,
    FAMILIES,
    HETEROGENEOUS,
    QUADRATIC_RADIAL,
    FitConfig,
    GipTarget,
    MeasureKind,
    RadialTarget,
    SeparationConfig,
    ball_volume,
    bessel_j,
    fit_shallow,
    g_ip_eval,
    g_ip_profile,
    g_ip_spectrum,
    g_ip_spectrum_mass,
    init_shallow,
    invariant_suite,
    phi_eval,
    phi_l2_mass,
    phi_radial,
    radial_target_eval,
    sample_measure,
    separation_experiment,
    split_width,
    unit_ball_radius,
    write_separation,
)
from qnn_hae.theory.measures import expected_norm_uniform
from qnn_hae.theory.shallow import count_shallow_params, embed_net


def test_unit_ball_radius_examples():
    assert unit_ball_radius(1) == pytest.approx(0.5, abs=1e-15)
    assert unit_ball_radius(2) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-15)
    assert abs(ball_volume(5) - 5.2638) < 1e-3


@pytest.mark.parametrize("d", range(1, 21))
def test_unit_volume_radius(d):
    # independent volume formula: pi^(d/2) / Gamma(d/2 + 1)
    v = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    assert abs(v * unit_ball_radius(d) ** d - 1.0) < 1e-10


def test_geometry_range_errors():
    for fn in (unit_ball_radius, ball_volume):
        with pytest.raises(RangeError):
            fn(0)


def test_bessel_examples():
    assert abs(bessel_j(0.5, math.pi)) < 1e-15
    assert bessel_j(0, 0.0) == 1.0
    series = sum((-1) ** k * 0.5 ** (2 * k + 1) / (math.factorial(k) * math.factorial(k + 1)) for k in range(30))
    assert abs(bessel_j(1, 1.0) - series) < 1e-14
    assert abs(series - 0.4400506) < 1e-7


@pytest.mark.parametrize("order", [0, 0.5, 1, 1.5, 2, 2.5, 3, 4, 5.5, 10])
def test_bessel_vs_scipy(order):
    z = np.linspace(1e-3, 50.0, 4001)
    assert np.max(np.abs(bessel_j(order, z) - sp.jv(order, z))) < 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 24).map(lambda k: k / 2), st.floats(1e-6, 50.0))
def test_bessel_property_vs_scipy(order, z):
    assert abs(float(bessel_j(order, z)) - sp.jv(order, z)) < 1e-9


@pytest.mark.parametrize("bad", [(-1, 1.0), (0.3, 1.0), (1, -0.5)])
def test_bessel_range_errors(bad):
    with pytest.raises(RangeError):
        bessel_j(*bad)


def test_phi_examples():
    assert abs(phi_eval(np.array([1.0]), 1)) < 1e-15
    x = np.array([[0.3, -0.4, 0.5], [-0.3, 0.4, -0.5], [0.0, 0.0, 0.0]])
    v = phi_eval(x, 3)
    assert v[0] == v[1]
    assert v[2] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_phi_matches_scipy_formula(d):
    R = unit_ball_radius(d)
    r = np.linspace(1e-3, 20.0, 500)
    ref = (R / r) ** (d / 2) * sp.jv(d / 2, 2 * math.pi * R * r)
    assert np.max(np.abs(phi_radial(r, d) - ref)) < 1e-10


@pytest.mark.parametrize("d", [1, 2, 3])
def test_phi_l2_norm_is_one(d):
    # trapezoid oracle on scipy's Bessel, independent of the package's quadrature
    R = unit_ball_radius(d)
    r = np.linspace(1e-9, 2000.0, 2_000_001)
    phi = (R / r) ** (d / 2) * sp.jv(d / 2, 2 * math.pi * R * r)
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    mass = area * trapezoid(r ** (d - 1) * phi**2, r)
    assert abs(mass - 1.0) < 1e-2
    assert abs(phi_l2_mass(d) - 1.0) < 1e-2


def test_phi_coordinate_mismatch():
    with pytest.raises(RangeError):
        phi_eval(np.ones((2, 3)), 4)


def test_gip_peak_and_validation():
    t = GipTarget(np.array([1.0, 0.0, 0.0]), 0.5)
    val = g_ip_eval(np.array([[0.0, 2.0, -1.0]]), t)[0]
    assert val == pytest.approx(math.sqrt(4 * t.R_d / 0.5) / (2 * math.pi), rel=1e-15)
    with pytest.raises(ConfigurationError):
        GipTarget(np.array([1.0, 1.0]), 0.5)
    with pytest.raises(RangeError):
        GipTarget(np.array([1.0, 0.0]), 1.0)


def test_gip_ridge_property():
    t = GipTarget(np.eye(5)[0], 0.3)
    x = rng_stream(0).normal(size=(50, 5))
    w = rng_stream(1).normal(size=(50, 5))
    w[:, 0] = 0.0
    assert np.array_equal(g_ip_eval(x, t), g_ip_eval(x + w, t))
    t2 = GipTarget.random(5, 0.3, rng_stream(2))
    w2 = w - np.outer(w @ t2.v, t2.v)
    assert np.max(np.abs(g_ip_eval(x, t2) - g_ip_eval(x + w2, t2))) < 1e-12


def test_gip_fft_oracle():
    t = GipTarget(np.eye(3)[0], 0.5)
    dt, n = 0.05, 2**18
    s = (np.arange(n) - n // 2) * dt
    g = g_ip_profile(s, t)
    # continuous transform int g(s) exp(-i xi s) ds; the shift phase is removed by ifftshift
    ghat = np.fft.fft(np.fft.ifftshift(g)).real * dt
    xi = 2 * math.pi * np.fft.fftfreq(n, d=dt)
    inside = np.abs(xi) < 0.8 * t.bandwidth
    outside = (np.abs(xi) > 1.2 * t.bandwidth) & (np.abs(xi) < 3 * t.bandwidth)
    height = math.sqrt((1 - 0.5) / (4 * t.R_d))
    assert np.max(np.abs(ghat[inside] - height)) < 1e-3
    assert np.max(np.abs(ghat[outside])) < 1e-3
    assert np.max(np.abs(g_ip_spectrum(xi[inside], t) - height)) < 1e-15


@pytest.mark.parametrize("d", range(1, 7))
@pytest.mark.parametrize("delta", [0.1, 0.5, 0.9])
def test_spectrum_mass_identity(d, delta):
    t = GipTarget(np.eye(d)[0], delta)
    assert abs(g_ip_spectrum_mass(t) - (1 - delta)) < 1e-6
    assert abs(g_ip_spectrum_mass(t, band=math.inf) - 1.0) < 1e-6


def test_radial_examples():
    t = RadialTarget.alternating(4)
    R = unit_ball_radius(4)
    pts = np.zeros((len(t.centers), 4))
    pts[:, 2] = t.centers
    assert radial_target_eval(pts, t).tolist() == [1.0, -1.0, 1.0, -1.0]
    far = np.array([[0.1 * R, 0, 0, 0], [3 * R, 0, 0, 0]])
    assert radial_target_eval(far, t).tolist() == [0.0, 0.0]
    assert RadialTarget.alternating(4, amplitude=0.5).amplitude == 0.5


def test_radial_sign_flip_invariance():
    t = RadialTarget.alternating(6)
    x = rng_stream(3).normal(size=(100, 6))
    flips = np.where(rng_stream(4).random((100, 6)) < 0.5, -1.0, 1.0)
    assert np.array_equal(radial_target_eval(x, t), radial_target_eval(x * flips, t))


def test_radial_validation():
    with pytest.raises(ConfigurationError):
        RadialTarget((1.0, 0.5), (1,), 0.1)
    with pytest.raises(ConfigurationError):
        RadialTarget((0.0, 1.0), (2,), 0.1)
    with pytest.raises(ConfigurationError):
        RadialTarget((0.0, 1.0), (1,), 0.9)


def test_uniform_mean_norm():
    x = sample_measure(MeasureKind("uniform_ball", radius=1.5), 2, 100_000, rng_stream(0))
    mean = np.linalg.norm(x, axis=1).mean()
    assert abs(mean - expected_norm_uniform(2, 1.5)) / expected_norm_uniform(2, 1.5) < 0.01
    assert expected_norm_uniform(2, 1.5) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", [MeasureKind("uniform_ball"), MeasureKind("mu_phi_squared")])
def test_measure_support_and_determinism(kind):
    a = sample_measure(kind, 3, 2000, rng_stream(5))
    b = sample_measure(kind, 3, 2000, rng_stream(5))
    assert np.array_equal(a, b)
    assert np.all(np.linalg.norm(a, axis=1) <= kind.support_radius(3) * (1 + 1e-12))


def test_mu_sampler_density():
    # radial CDF of the phi^2 measure truncated at r_max, against the samples
    d = 2
    kind = MeasureKind("mu_phi_squared")
    x = sample_measure(kind, d, 20_000, rng_stream(6))
    r = np.linalg.norm(x, axis=1)
    grid = np.linspace(1e-6, kind.support_radius(d), 20001)
    dens = grid ** (d - 1) * phi_radial(grid, d) ** 2
    cdf = np.cumsum(dens)
    cdf /= cdf[-1]
    half = grid[np.searchsorted(cdf, 0.5)]
    assert abs(np.median(r) - half) / half < 0.03


def test_mu_sampler_stalls_in_high_dimension():
    with pytest.raises(SamplerStallError, match="uniform_ball"):
        sample_measure(MeasureKind("mu_phi_squared"), 8, 100, rng_stream(0))


def test_sample_measure_needs_points():
    with pytest.raises(RangeError):
        sample_measure(MeasureKind(), 2, 0, rng_stream(0))


def test_split_width():
    assert split_width(HETEROGENEOUS, 5) == (3, 2)
    assert split_width(CONVENTIONAL, 5) == (5, 0)
    assert split_width(QUADRATIC_RADIAL, 5) == (0, 5)


@pytest.mark.parametrize("family", FAMILIES)
def test_shallow_param_count_and_grads(family):
    x = rng_stream(0).normal(size=(64, 3))
    net = init_shallow(family, 5, 3, rng_stream(1), x)
    assert net.n_params == count_shallow_params(family, 5, 3)
    # init puts hinges through data points; move off them so differences never straddle a kink
    r = rng_stream(9)
    for arr in net.params.values():
        arr[...] = r.uniform(-1, 1, arr.shape)
    y = np.sin(x[:, 0]) + x[:, 1] ** 2
    _, grads = net.loss_and_grad(x, y)
    h = 1e-6
    for name, arr in net.params.items():
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = net.loss_and_grad(x, y)[0]
            flat[i] = orig - h
            lm = net.loss_and_grad(x, y)[0]
            flat[i] = orig
            num = (lp - lm) / (2 * h)
            assert abs(grads[name].reshape(-1)[i] - num) <= 1e-6 * max(1.0, abs(num))


def test_quadratic_radial_net_is_radial():
    x = rng_stream(2).normal(size=(200, 4))
    net = init_shallow(QUADRATIC_RADIAL, 16, 4, rng_stream(3), x)
    flips = np.where(rng_stream(4).random((200, 4)) < 0.5, -1.0, 1.0)
    assert np.array_equal(net.predict(x), net.predict(x * flips))


def test_embed_preserves_function():
    x = rng_stream(5).normal(size=(100, 3))
    net = init_shallow(HETEROGENEOUS, 4, 3, rng_stream(6), x)
    big = embed_net(net, 8, rng_stream(7), x)
    assert big.width == 8
    assert np.max(np.abs(big.predict(x) - net.predict(x))) < 1e-12


def test_fit_zero_target():
    cfg = FitConfig(steps=200, restarts=1)
    net, err = fit_shallow(CONVENTIONAL, 1, lambda x: np.zeros(len(x)), MeasureKind(), 200, cfg, d=3, rng=rng_stream(0))
    assert err < 1e-6


def test_fit_conventional_gip():
    t = GipTarget.random(4, 0.5, rng_stream(1))
    cfg = FitConfig(steps=2000, restarts=3)
    net, err = fit_shallow(CONVENTIONAL, 32, lambda x: g_ip_eval(x, t), MeasureKind(), 4096, cfg, d=4, rng=rng_stream(2))
    assert err < 0.05 * net.meta["target_second_moment"]
    assert len(net.meta["restart_errors"]) == 3


def test_fit_quadratic_radial_on_gip_equal_norm_predictions():
    t = GipTarget.random(4, 0.5, rng_stream(1))
    cfg = FitConfig(steps=300, restarts=1)
    net, _ = fit_shallow(QUADRATIC_RADIAL, 8, lambda x: g_ip_eval(x, t), MeasureKind(), 1000, cfg, d=4, rng=rng_stream(2))
    a = np.array([[0.3, 0.1, -0.2, 0.4]])
    assert net.predict(a)[0] == net.predict(-a)[0] == net.predict(np.abs(a))[0]


def test_fit_sample_floor():
    with pytest.raises(ConfigurationError):
        fit_shallow(CONVENTIONAL, 32, lambda x: x[:, 0], MeasureKind(), 100, FitConfig(), d=4)


def test_warm_start_never_worse():
    t = RadialTarget.alternating(3)
    f = lambda x: radial_target_eval(x, t)  # noqa: E731
    cfg = FitConfig(steps=300, restarts=1)
    x = sample_measure(MeasureKind(), 3, 2000, rng_stream(0))
    xt = sample_measure(MeasureKind(), 3, 2000, rng_stream(1))
    small, e1 = fit_shallow(HETEROGENEOUS, 4, f, None, 2000, cfg, rng=rng_stream(2), train_x=x, test_x=xt)
    _, e2 = fit_shallow(HETEROGENEOUS, 8, f, None, 2000, cfg, rng=rng_stream(3), train_x=x, test_x=xt, warm_start=small)
    assert e2 <= e1


def test_separation_config_validation():
    with pytest.raises(ConfigurationError):
        SeparationConfig(measure="mu_phi_squared", d=8)
    with pytest.raises(ConfigurationError):
        SeparationConfig(n_samples=100)
    with pytest.raises(ConfigurationError):
        SeparationConfig.from_dict({"dims": 3})
    with pytest.raises(ConfigurationError):
        SeparationConfig(targets=("nope",))
    assert SeparationConfig.from_dict(SeparationConfig().to_dict()) == SeparationConfig()


def test_small_experiment_outputs(tmp_path):
    cfg = SeparationConfig(d=3, widths=(2, 4), seeds=(0, 1), n_samples=600, steps=100, restarts=1)
    res = separation_experiment(cfg)
    assert len(res.rows) == 3 * 3 * 2 * 2
    assert set(res.matrix) == {"g_ip", "radial", "sum"}
    assert all(set(v) == set(FAMILIES) for v in res.matrix.values())
    paths = write_separation(res, tmp_path)
    lines = paths["csv"].read_text().splitlines()
    assert lines[0] == "target,family,width,seed,error" and len(lines) == 37
    assert json.loads(paths["metadata"].read_text())["measurement"] == "new"
    assert all(paths[f"svg_{t}"].read_text().startswith("<svg") for t in ("g_ip", "radial", "sum"))
    again = separation_experiment(cfg)
    assert again.rows == res.rows


def test_small_experiment_mu_measure():
    cfg = SeparationConfig(d=2, widths=(2,), seeds=(0,), n_samples=300, steps=50, restarts=1, measure="mu_phi_squared")
    res = separation_experiment(cfg)
    assert not res.failures and len(res.rows) == 9


def test_invariant_suite_passes():
    checks = invariant_suite()
    assert all(c["passed"] for c in checks)
    assert len(checks) == 6 * 3 * 2 + 1 + 20


def test_width_never_hurts(separation_default):
    res = separation_default
    widths = sorted(res.config.widths)
    for t, per_family in res.medians.items():
        for f, per_width in per_family.items():
            for lo, hi in zip(widths[:-1], widths[1:]):
                assert per_width[hi] <= 1.05 * per_width[lo], (t, f, lo, hi)


def test_default_matrix_pattern(separation_default):
    assert separation_default.matrix["g_ip"][CONVENTIONAL] == "✓"
    assert separation_default.matrix["radial"][QUADRATIC_RADIAL] == "✓"
    assert separation_default.matrix["sum"][HETEROGENEOUS] == "✓"
    assert separation_default.matrix["sum"][CONVENTIONAL] == "✗"
    assert separation_default.matrix["sum"][QUADRATIC_RADIAL] == "✗"
