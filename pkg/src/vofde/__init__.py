"""Fast solver for a variable-order fractional diffusion-advection two-point problem."""

from .errors import NumericalAccuracyError, QuadratureError, ResourceError, SingularSystemError, VofdeError
from .experiments import StudyRow, convergence_study, experiment1, experiment2, scaling_benchmark
from .model import ApproxParams, Grid, Problem, Solution, make_grid
from .postprocess import reconstruct_u, to_solution, u_h_at
from .solver import SolveReport, SolverKind, solve

__all__ = [
    "ApproxParams",
    "Grid",
    "NumericalAccuracyError",
    "Problem",
    "QuadratureError",
    "ResourceError",
    "SingularSystemError",
    "Solution",
    "SolveReport",
    "SolverKind",
    "StudyRow",
    "VofdeError",
    "convergence_study",
    "experiment1",
    "experiment2",
    "make_grid",
    "reconstruct_u",
    "scaling_benchmark",
    "solve",
    "to_solution",
    "u_h_at",
]
