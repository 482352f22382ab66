"""Numerics for the generalized derivative nonlinear Schrodinger equation.

Spectral kernels on a large periodic grid, closed-form and admissible
initial data, IFRK4 and Picard-Duhamel evolution, norm diagnostics and a
command-line harness (``gdnls``).
"""

__version__ = "0.1.0"

from .data import (
    AdmissibilityReport,
    SolitonParams,
    admissible_datum,
    check_admissibility,
    mizohata_functional,
    regularity_indices,
    soliton_profile,
    soliton_solution,
    weight_exponent,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    EdgeDecayError,
    GdnlsError,
    GridMismatchError,
    NonFiniteFieldError,
    ParameterError,
)
from .evolution import (
    EquationSpec,
    PicardConfig,
    StepperConfig,
    Trajectory,
    gauge_transform,
    nonlinearity,
    picard_apply_phi,
    residual,
    solve,
    solve_picard,
    step_ifrk4,
)
from .grid import (
    ComplexField,
    Grid,
    Multiplier,
    apply_multiplier,
    check_edge_decay,
    commutation_residual,
    derivative,
    free_evolve,
    l2_norm,
    sobolev_norm,
    weighted_lp_norm,
)

__all__ = [
    "AdmissibilityReport",
    "SolitonParams",
    "admissible_datum",
    "check_admissibility",
    "mizohata_functional",
    "regularity_indices",
    "soliton_profile",
    "soliton_solution",
    "weight_exponent",
    "AdmissibilityError",
    "ConfigError",
    "EdgeDecayError",
    "GdnlsError",
    "GridMismatchError",
    "NonFiniteFieldError",
    "ParameterError",
    "EquationSpec",
    "PicardConfig",
    "StepperConfig",
    "Trajectory",
    "gauge_transform",
    "nonlinearity",
    "picard_apply_phi",
    "residual",
    "solve",
    "solve_picard",
    "step_ifrk4",
    "ComplexField",
    "Grid",
    "Multiplier",
    "apply_multiplier",
    "check_edge_decay",
    "commutation_residual",
    "derivative",
    "free_evolve",
    "l2_norm",
    "sobolev_norm",
    "weighted_lp_norm",
]
