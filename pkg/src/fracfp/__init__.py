"""Finite element solver for the time-fractional Fokker-Planck equation."""

from .fem1d import SpatialMesh, TriDiagMatrix, BreakdownError
from .fracops import a_seq, mittag_leffler, omega, weights_row
from .problems import (
    ProblemSpec,
    application_problem,
    manufactured_problem,
    random_initial_problem,
    reference_first_moment,
)
from .stepper import StepError, TemporalMesh, Trajectory, build_temporal_mesh, solve

__version__ = "0.1.0"

__all__ = [
    "SpatialMesh",
    "TriDiagMatrix",
    "BreakdownError",
    "a_seq",
    "mittag_leffler",
    "omega",
    "weights_row",
    "ProblemSpec",
    "application_problem",
    "manufactured_problem",
    "random_initial_problem",
    "reference_first_moment",
    "StepError",
    "TemporalMesh",
    "Trajectory",
    "build_temporal_mesh",
    "solve",
]
