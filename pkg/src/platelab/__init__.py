"""Composite hinged-plate eigenvalue optimization and verification lab."""

__version__ = "0.1.0"

from . import diagnostics, geometry, radial
from .eigensolver import EigenResult, principal_pair, rayleigh_quotient
from .fields import ScalarField, constant_field, field_from_function
from .geometry import (
    Axis,
    DomainSpec,
    Grid,
    annulus,
    build_grid,
    boundary_normal,
    disk,
    ellipse,
    rectangle,
    reflect_field,
    reflect_values,
    reflection_caps,
    stadium,
    unit_square,
)
from .optimizer import OptimalPair, OptimizeOptions, SolveReport, optimize
from .plate import solve_navier
from .poisson import (
    DiscreteLaplacian,
    apply_laplacian,
    assemble_laplacian,
    solve_dirichlet,
)
from .radial import radial_optimize
from .rearrange import (
    DensityField,
    ThresholdResult,
    mass,
    optimal_density,
    uniform_density,
)

__all__ = [
    "__version__",
    "Axis",
    "DensityField",
    "DiscreteLaplacian",
    "DomainSpec",
    "EigenResult",
    "Grid",
    "OptimalPair",
    "OptimizeOptions",
    "ScalarField",
    "SolveReport",
    "ThresholdResult",
    "annulus",
    "apply_laplacian",
    "assemble_laplacian",
    "boundary_normal",
    "build_grid",
    "constant_field",
    "diagnostics",
    "disk",
    "ellipse",
    "field_from_function",
    "geometry",
    "mass",
    "optimal_density",
    "optimize",
    "principal_pair",
    "radial",
    "radial_optimize",
    "rayleigh_quotient",
    "rectangle",
    "reflect_field",
    "reflect_values",
    "reflection_caps",
    "solve_dirichlet",
    "solve_navier",
    "stadium",
    "uniform_density",
    "unit_square",
]
