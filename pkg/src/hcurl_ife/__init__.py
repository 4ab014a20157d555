"""Immersed Nedelec finite elements for 2D H(curl)-elliptic interface problems."""
from .analysis import ErrorReport, ManufacturedSolution, convergence_rates, hcurl_error
from .assembly import Discretization, LinearSystem, PenaltySettings, QuadSettings, apply_dirichlet, assemble
from .geometry import A1Violation, Circle, Line, LevelSetInterface, classify_elements
from .ife import CoefficientPair, build_local_basis
from .mesh import MeshTopology, build_uniform_triangulation
from .solve import SolverBreakdown, SolveReport, solve

__all__ = [
    "A1Violation", "Circle", "CoefficientPair", "Discretization", "ErrorReport", "LevelSetInterface", "Line",
    "LinearSystem", "ManufacturedSolution", "MeshTopology", "PenaltySettings", "QuadSettings", "SolveReport",
    "SolverBreakdown", "apply_dirichlet", "assemble", "build_local_basis", "build_uniform_triangulation",
    "classify_elements", "convergence_rates", "hcurl_error", "solve",
]
