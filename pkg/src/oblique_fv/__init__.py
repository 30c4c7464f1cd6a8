"""Finite volume schemes for the Laplace equation with an oblique derivative condition.

Three discretizations of the bottom boundary condition are provided
(``central``, ``upwind``, ``splitting``) on generalized hexahedral meshes
built from structured representative grids.
"""
from .analysis import ErrorReport, Seminorms, eoc, error_report, interpolate, seminorms
from .assembly import (SCHEMES, BreakdownError, LinearSystem, MaxIterError, SingularMatrixError,
                       SolveReport, SolverError, assemble, bilinear_probe, default_R,
                       linear_form, solve, solve_dense_oracle)
from .cases import Case, CaseError, affine_case, builtin_cases, get_case, zero_case
from .config import ConfigError, ExperimentConfig
from .fields import DiscreteField, random_field
from .fluxes import SplittingBreakdown
from .grid import Domain, GridError, RepresentativeGrid, generate_grid
from .mesh import Mesh, MeshDegeneracyError, boundary_edge_conormal, build_mesh
from .regularity import (RegularityReport, reg_mesh, reg_mesh_gamma, reg_mesh_omega,
                         regularity_report, varrho_mesh_omega)
from .study import run_study
from .vtk import read_vtk, write_vtk

__version__ = "0.1.0"
