"""P1 finite elements and Nehari-manifold minimization for a singular weighted p-Laplacian problem.

    -div(xi |grad u|^(p-2) grad u) = a u^(-gamma) + lam u^(r-1)  in Omega,  u = 0 on the boundary,

with 0 < gamma < 1 < p < r. Two positive solutions are sought as minimizers of
the energy on the plus and minus parts of the Nehari manifold.
"""

from .assembly import ProblemParams, WeightField, energy, fiber_integrals
from .errors import (
    DomainError,
    InfeasibleRayError,
    InvalidInputError,
    NoIntersectionError,
    SingularityGuardError,
)
from .mesh import Mesh, build_interval_mesh, build_rect_mesh, read_mesh, write_mesh
from .nehari import FiberRoots, NehariTag, classify, fibering_roots, lambda_crit, project
from .optimize import SolverConfig, SolveResult, minimize_on_branch
from .verify import VerificationReport, run_invariant_suite, verify_solution

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FiberRoots",
    "InfeasibleRayError",
    "InvalidInputError",
    "Mesh",
    "NehariTag",
    "NoIntersectionError",
    "ProblemParams",
    "SingularityGuardError",
    "SolveResult",
    "SolverConfig",
    "VerificationReport",
    "WeightField",
    "build_interval_mesh",
    "build_rect_mesh",
    "classify",
    "energy",
    "fiber_integrals",
    "fibering_roots",
    "lambda_crit",
    "minimize_on_branch",
    "project",
    "read_mesh",
    "run_invariant_suite",
    "verify_solution",
    "write_mesh",
]
