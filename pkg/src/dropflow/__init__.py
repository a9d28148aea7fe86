"""Boundary-integral simulation of viscous drops in 2D Stokes flow."""

from .bie_core import (Density, GMRESError, MaterialCoefficients,
                       apply_system, solve_density)
from .dynamics import (RunResult, SimulationState, SolverOptions,
                       TimeStepError, adapt_point_count, detect_steady,
                       modify_tangential, run_to_steady, step,
                       velocity_of_markers)
from .geometry import (DropBoundary, NewtonError, equalize_arclength,
                       geometric_diagnostics, resample, spectral_derivatives)
from .grids import PanelGrid, build_panel_grid, to_equispaced, to_panel_grid
from .scenes import SceneConfig, SceneError, build_state, load_scene, preset_drops
from .special_quad import (OnPanelTarget, SpecialQuadPlan, build_plan,
                           compute_pq, corrected_integrals, corrected_kernels,
                           monomial_coefficients, needs_special)
from .velocity_eval import VelocityField, boundary_velocity, field_velocity

__all__ = [
    "Density", "DropBoundary", "GMRESError", "MaterialCoefficients",
    "NewtonError", "OnPanelTarget", "PanelGrid", "RunResult", "SceneConfig",
    "SceneError", "SimulationState", "SolverOptions", "SpecialQuadPlan",
    "TimeStepError", "VelocityField", "adapt_point_count", "apply_system",
    "boundary_velocity", "build_panel_grid", "build_plan", "build_state",
    "compute_pq", "corrected_integrals", "corrected_kernels", "detect_steady",
    "equalize_arclength", "field_velocity", "geometric_diagnostics",
    "load_scene", "modify_tangential", "monomial_coefficients",
    "needs_special", "preset_drops", "resample", "run_to_steady",
    "solve_density", "spectral_derivatives", "step", "to_equispaced",
    "to_panel_grid", "velocity_of_markers",
]

__version__ = "0.1.0"
