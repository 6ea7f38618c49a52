"""Numerical solver and existence checker for semilinear fractional
evolution equations with non-instantaneous impulses.

The public surface mirrors the pipeline: special functions (``specfun``),
fractional calculus on sampled data (``fracops``), operator families
(``operators``), the mild-solution solver (``solver``), the existence
certificate (``existence``), post-hoc residual verification (``verifier``)
and the problem-file front end (``config`` / ``cli``).
"""

from .errors import (
    AccuracyError,
    ConfigError,
    ContractionError,
    DomainError,
    IterationError,
    OverflowGuardError,
)
from .existence import (
    Constants,
    ExistenceCertificate,
    SamplingConfig,
    check_existence,
    compute_constants,
)
from .fracops import (
    PiecewiseTrajectory,
    SampledFn,
    hilfer_derivative,
    pc_norm,
    rl_integral,
    weighted_norm,
)
from .operators import (
    GeneratorMatrix,
    OperatorTable,
    estimate_M,
    g_alpha,
    k_alpha,
    p_alpha_beta,
    resolvent_property_check,
)
from .solver import (
    Impulse,
    ProblemSpec,
    SolveReport,
    SolverConfig,
    apply_F,
    impulse_fixed_point,
    mild_solve,
)
from .specfun import SeriesConfig, gamma, mittag_leffler, wright_m, wright_moment
from .verifier import ResidualReport, initial_condition_check, integral_residual

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConfigError",
    "Constants",
    "ContractionError",
    "DomainError",
    "ExistenceCertificate",
    "GeneratorMatrix",
    "Impulse",
    "IterationError",
    "OperatorTable",
    "OverflowGuardError",
    "PiecewiseTrajectory",
    "ProblemSpec",
    "ResidualReport",
    "SampledFn",
    "SamplingConfig",
    "SeriesConfig",
    "SolveReport",
    "SolverConfig",
    "apply_F",
    "check_existence",
    "compute_constants",
    "estimate_M",
    "g_alpha",
    "gamma",
    "hilfer_derivative",
    "impulse_fixed_point",
    "initial_condition_check",
    "integral_residual",
    "k_alpha",
    "mild_solve",
    "mittag_leffler",
    "p_alpha_beta",
    "pc_norm",
    "resolvent_property_check",
    "rl_integral",
    "weighted_norm",
    "wright_m",
    "wright_moment",
]
