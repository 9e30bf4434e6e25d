"""Numerical functional calculus for the Bessel operator
L = -d^2/dx^2 - (r/x) d/dx on ((0, inf), x^r dx)."""

from .bessel import Constants, bessel_j, constants, eigen_residual, gamma, phi_lambda, phi_matrix
from .calculus import (
    MollifierTable,
    Multiplier,
    TailEstimateConfig,
    TailMass,
    apply_multiplier,
    build_mollifier,
    dyadic_symbol,
    heat,
    imaginary_power,
    kernel_column,
    kernel_tail_mass,
    psi,
    tail_config,
)
from .czd import CZDecomposition, decompose
from .errors import (
    BesselOpError,
    DomainError,
    ResolutionWarning,
    TruncationWarning,
    UsageError,
)
from .experiments import (
    ExperimentReport,
    TestFamily,
    fit_exponent,
    norm_growth,
    tail_scaling,
    weak_type_sweep,
)
from .grid import SampledFunction, WeightedGrid, build_grid, distribution_mass, integrate, lp_norm
from .measure import BesselSpace, Interval, ball_volume, doubling_constant, dyadic_annulus
from .transform import TransformPlan, build_plan, calibrate, forward, inverse, plancherel_defect
from .translation import convolve, translate, triangle_area

__version__ = "0.1.0"
