"""Finite-volume lab for a 2D doubly degenerate nutrient taxis system."""

from .grid import (
    FaceField,
    GridSpec,
    ScalarField,
    div_faces,
    grad_faces,
    hessian_sq,
    integrate,
    laplacian,
    linf,
    lp_norm,
)
from .model import Params, State, flux_u, regularize_initial, rhs_u, rhs_v
from .stepper import StepControl, Trajectory, run, stable_dt, step_euler
from .diagnostics import (
    DiagConfig,
    DiagRecord,
    ViolationReport,
    check_invariants,
    dual_distance,
    functionals,
)

__version__ = "0.1.0"

__all__ = [
    "FaceField", "GridSpec", "ScalarField", "div_faces", "grad_faces",
    "hessian_sq", "integrate", "laplacian", "linf", "lp_norm",
    "Params", "State", "flux_u", "regularize_initial", "rhs_u", "rhs_v",
    "StepControl", "Trajectory", "run", "stable_dt", "step_euler",
    "DiagConfig", "DiagRecord", "ViolationReport", "check_invariants",
    "dual_distance", "functionals",
]
