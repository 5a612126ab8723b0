"""Short-term scheduling of cascaded hydropower reservoirs.

The package builds mixed-integer models of increasing physical fidelity
for a cascade, solves them with HiGHS, and replays the resulting schedule
through the exact nonlinear physics to measure what each simplification
costs.
"""

from .approx import FitSpec, PwlCurve1D, PwlSurface2D, fit_pwl_1d_optimal, fit_pwl_1d_uniform, mccormick_envelope, triangulate_grid_2d
from .domain import (
    CascadeSystem,
    Curve1D,
    GeneratingUnit,
    HydraulicArc,
    LossModel,
    OperatingZoneSet,
    PhysicalConstants,
    PowerSurface,
    Reservoir,
    TimeGrid,
    topological_order,
    validate_topology,
)
from .errors import CascadeError
from .formulation import build_model
from .io import Case, parse_cascade_file
from .oracle import brute_force_oracle
from .routing import RoutingSpec
from .simulate import fidelity_gap, mass_balance_residual, simulate
from .solve import Schedule, SolveOptions, extract_schedule, solve
from .synthetic import generate_synthetic_cascade
from .tiers import TIER_PRESETS, FidelityConfig, ObjectiveSpec, tier_config

__version__ = "0.1.0"

__all__ = [
    "Case", "CascadeError", "CascadeSystem", "Curve1D", "FidelityConfig", "FitSpec", "GeneratingUnit",
    "HydraulicArc", "LossModel", "ObjectiveSpec", "OperatingZoneSet", "PhysicalConstants", "PowerSurface",
    "PwlCurve1D", "PwlSurface2D", "Reservoir", "RoutingSpec", "Schedule", "SolveOptions", "TIER_PRESETS",
    "TimeGrid", "brute_force_oracle", "build_model", "extract_schedule", "fidelity_gap", "fit_pwl_1d_optimal",
    "fit_pwl_1d_uniform", "generate_synthetic_cascade", "mass_balance_residual", "mccormick_envelope",
    "parse_cascade_file", "simulate", "solve", "tier_config", "topological_order", "triangulate_grid_2d",
    "validate_topology",
]
