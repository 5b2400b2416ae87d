"""Minimum-residual (DPG) boundary elements for the hypersingular equation."""
from .exceptions import DPGError, LoadError, MeshError, QuadratureError, QuadratureWarning
from .mesh import (SurfaceMesh, build_cube_surface, build_square_screen, element_geometry,
                   refine, refine_uniform, skeleton, validate_mesh)
from .potentials import QuadratureConfig, analytic_deg0, duffy_moment
from .assembly import (DofLayout, ExactSolution, SystemMatrices, assemble_B, assemble_gram,
                       assemble_load_analytic, assemble_load_manufactured)
from .solver import (SolveReport, TrialCoefficients, energy_error_sq, local_indicators,
                     solve_normal_equations, trial_to_test)

__version__ = "0.1.0"
