"""Compressed-sensing toolkit for co-located MIMO radar measurement models."""

from .config import DopplerMode, GridDomainError, GridIndex, RadarConfig
from .operator import MeasurementOperator, SizeCapError, build_x_theta
from .signals import SignalFamily, SignalSet, derived_rng, generate_signals
from .solvers import (
    SolverOptions,
    SolverResult,
    basis_pursuit_denoise,
    debias,
    declare_success,
    lasso,
    paper_lambda,
)
from .supports import (
    BalancednessReport,
    ParameterError,
    SupportSet,
    TargetScene,
    balancedness,
    make_scene,
    sample_balanced_support,
    sample_most_balanced_support,
    sample_unconstrained_support,
    threshold_amplitude,
)

__all__ = [
    "BalancednessReport",
    "DopplerMode",
    "GridDomainError",
    "GridIndex",
    "MeasurementOperator",
    "ParameterError",
    "RadarConfig",
    "SignalFamily",
    "SignalSet",
    "SizeCapError",
    "SolverOptions",
    "SolverResult",
    "SupportSet",
    "TargetScene",
    "balancedness",
    "basis_pursuit_denoise",
    "build_x_theta",
    "debias",
    "declare_success",
    "derived_rng",
    "generate_signals",
    "lasso",
    "make_scene",
    "paper_lambda",
    "sample_balanced_support",
    "sample_most_balanced_support",
    "sample_unconstrained_support",
    "threshold_amplitude",
]

__version__ = "0.1.0"
