"""Finite element methods for elliptic interface problems on unfitted meshes.

Three discretizations of the transmission problem with a coefficient
jumping across a smooth closed curve: the standard P1 method, a fitted
method enriched with conforming cut-point basis functions, and a hybrid
method with per-element enrichment tied together by piecewise-constant
Lagrange multipliers on the cut edges.
"""

from .mesh import Mesh, QualityReport, build_structured_mesh, mesh_quality_report
from .geometry import (
    CircleInterface,
    FittedMesh,
    GeometryError,
    LevelSetInterface,
    build_fitted_mesh,
)
from .assembly import (
    CoefficientField,
    assemble_fitted,
    assemble_hybrid,
    assemble_standard,
)
from .solver import (
    SolverConfig,
    SolverError,
    cg_solve,
    dense_direct_solve,
    solve_fitted,
    solve_hybrid,
    solve_standard,
)
from .benchmark import (
    ConvergenceTable,
    ErrorReport,
    RadialProblem,
    convergence_study,
    error_norms,
    flux_diagnostic,
    patch_test,
    run_single,
)

__all__ = [
    "Mesh",
    "QualityReport",
    "build_structured_mesh",
    "mesh_quality_report",
    "CircleInterface",
    "FittedMesh",
    "GeometryError",
    "LevelSetInterface",
    "build_fitted_mesh",
    "CoefficientField",
    "assemble_standard",
    "assemble_fitted",
    "assemble_hybrid",
    "SolverConfig",
    "SolverError",
    "cg_solve",
    "solve_standard",
    "solve_fitted",
    "solve_hybrid",
    "dense_direct_solve",
    "RadialProblem",
    "ErrorReport",
    "ConvergenceTable",
    "run_single",
    "error_norms",
    "convergence_study",
    "patch_test",
    "flux_diagnostic",
]

__version__ = "0.1.0"
