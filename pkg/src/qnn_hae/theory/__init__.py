"""Numerical side of the approximation-separation constructions."""

from .experiment import (
    PASS_THRESHOLD,
    TARGETS,
    SeparationConfig,
    SeparationResult,
    invariant_suite,
    separation_experiment,
    write_separation,
)
from .measures import MU_PHI_SQUARED, UNIFORM_BALL, MeasureKind, sample_measure, uniform_ball
from .shallow import (
    CONVENTIONAL,
    FAMILIES,
    HETEROGENEOUS,
    QUADRATIC_RADIAL,
    FitConfig,
    ShallowNet,
    fit_shallow,
    init_shallow,
    split_width,
)
from .special import (
    ball_volume,
    bessel_j,
    bessel_j_scaled,
    phi_eval,
    phi_l2_mass,
    phi_radial,
    sphere_area,
    unit_ball_radius,
)
from .targets import (
    GipTarget,
    RadialTarget,
    g_ip_eval,
    g_ip_profile,
    g_ip_spectrum,
    g_ip_spectrum_mass,
    radial_profile,
    radial_target_eval,
    sinc,
)
