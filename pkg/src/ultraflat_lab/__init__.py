"""Numerical laboratory for unimodular polynomials on the unit circle."""

from .generators import FlattenerConfig, FlattenerTrace, flat_sweep, flatten, quadratic_phase, random_unimodular, rudin_shapiro
from .phase import (
    DistributionReport,
    FlatnessReport,
    NearZeroModulus,
    PhaseProfile,
    angular_speed_distribution,
    beta_profile,
    conjugate_speed_identity,
    flatness_report,
    modulus_profile,
    phase_derivative,
    phase_profile,
    sine_beta_identity,
    unwrap_phase,
)
from .poly_core import (
    CircleSamples,
    ComplexPolynomial,
    UnimodularPolynomial,
    conjugate_reciprocal,
    derivative,
    evaluate_on_grid,
    load_polynomial,
    make_unimodular,
    mean_square,
    save_polynomial,
    self_convolution_sum,
    subtract,
)
from .quadrature import LqResult, NoConvergence, interval_lemma37_check, kq_constant, moment_39_check, periodic_lq_mean, refine_until
from .theorems import ConvergenceTable, TheoremVerdict, sweep_verify

__version__ = "0.1.0"
