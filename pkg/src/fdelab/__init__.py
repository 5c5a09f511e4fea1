"""fdelab: numerical experiments for very fast diffusion u_t = Δ(u^m) with
point singularities."""
__version__ = "0.1.0"

from .errors import FDELabError
from .model import ModelParams, exponent_windows, validate_params
from .mesh import RadialMesh, CartesianGrid, annulus_measure, build_cartesian, build_graded_radial
from .profiles import (
    CapSchedule,
    OscillationSpec,
    SingularProfile,
    cap_regularize,
    exact_separable_extinction,
    exact_static_singular,
    oscillating_profile,
    oscillation_spec,
    power_law_profile,
    radial_power_law,
)
from .solver_radial import BoundaryData, Trajectory, cap_sweep, solve, solve_ensemble, step_implicit
from .solver_cartesian import solve_nd, step_explicit
from .estimators import CartesianFDESolver, PowerLawRateEstimator, RadialFDESolver

__all__ = [
    "FDELabError", "ModelParams", "exponent_windows", "validate_params",
    "RadialMesh", "CartesianGrid", "annulus_measure", "build_cartesian",
    "build_graded_radial", "CapSchedule", "OscillationSpec", "SingularProfile",
    "cap_regularize", "exact_separable_extinction", "exact_static_singular",
    "oscillating_profile", "oscillation_spec", "power_law_profile", "radial_power_law",
    "BoundaryData", "Trajectory", "cap_sweep", "solve", "solve_ensemble", "step_implicit",
    "solve_nd", "step_explicit", "CartesianFDESolver", "PowerLawRateEstimator",
    "RadialFDESolver",
]
