"""Gradient-robust mixed finite elements for nearly incompressible elasticity.

Q2 x DGP1 and Q2 x Q1 discretizations on structured rectangle meshes, with
an optional BDM reconstruction of the test functions in the load.
"""

from .mesh import Mesh, build_rect_mesh
from .fe_basis import (DiscreteField, FunctionSpace, SpaceKind, build_space, bdm_space,
                       discontinuous_p, interpolate, scalar_lagrange_q, vector_lagrange_q)
from .reconstruction import reconstruct, reconstruction_defects
from .assembly import RECONSTRUCTED, STANDARD, SaddleSystem, build_saddle_system
from .linsolve import SingularMatrixError, factorize, solve, solve_saddle
from .problems import (ProblemSpec, ThermoParams, example_gradient_cubic,
                       example_gradient_poly, example_incompressible,
                       example_nearly_incompressible, thermo_pipeline)
from .analysis import ErrorReport, h1_error
from .pipeline import error_report, solve_problem, unit_mesh

__version__ = "0.1.0"
