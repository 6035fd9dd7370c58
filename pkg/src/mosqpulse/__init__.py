"""Impulsive mosquito-release planning against dengue outbreaks.

Simulates sterile-male and Wolbachia release strategies as state-jump
impulses on epidemiological ODE models, computes reproduction numbers and
equilibria, differentiates the infected-human cost with respect to release
times and sizes, and optimises schedules under a total-budget constraint.
"""

from .params import EpiParams, load_params, params_from_mapping
from .dynamics import (
    SeirState,
    SitState,
    WbState,
    rhs_seir,
    rhs_sit,
    rhs_wb,
    invasion_rate,
    release_efficiency,
    release_mass,
    release_mass_inverse,
    invasion_threshold,
)
from .simulate import (
    ReleaseSchedule,
    Trajectory,
    SimulationError,
    simulate,
    simulate_box_pulse,
    apply_jump_sit,
    apply_jump_wb,
    sterile_population,
    cost_J,
    default_init,
)
from .analysis import R0Report, EquilibriumSet, r0_sit, r0_wb, r_pstar, equilibria_seir, equilibria_wb
from .gradients import GradientReport, grad_J, grad_J_fd
from .optimizer import OptimizationResult, optimize, project_times, merge_coincident

__version__ = "0.1.0"

__all__ = [
    "EpiParams",
    "load_params",
    "params_from_mapping",
    "SeirState",
    "SitState",
    "WbState",
    "rhs_seir",
    "rhs_sit",
    "rhs_wb",
    "invasion_rate",
    "release_efficiency",
    "release_mass",
    "release_mass_inverse",
    "invasion_threshold",
    "ReleaseSchedule",
    "Trajectory",
    "SimulationError",
    "simulate",
    "simulate_box_pulse",
    "apply_jump_sit",
    "apply_jump_wb",
    "sterile_population",
    "cost_J",
    "default_init",
    "R0Report",
    "EquilibriumSet",
    "r0_sit",
    "r0_wb",
    "r_pstar",
    "equilibria_seir",
    "equilibria_wb",
    "GradientReport",
    "grad_J",
    "grad_J_fd",
    "OptimizationResult",
    "optimize",
    "project_times",
    "merge_coincident",
    "__version__",
]
