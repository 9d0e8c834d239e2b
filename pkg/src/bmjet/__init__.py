"""Closed-form geometry of the conformally deformed jet Berwald-Moor metric,
with finite-difference oracles, geodesic integration and a verification CLI."""

from .connection import ConnectionBundle, cartan, nonlinear_connection, spray, torsions
from .curvature import (
    CurvatureBundle,
    EinsteinBlocks,
    StressEnergy,
    conservation_residuals,
    curvature_tensors,
    einstein_blocks,
    em_tensor,
    ricci,
    scalar_curvature,
    stress_energy,
)
from .errors import ConfigError, DomainError, ExpressionError, ParseError, StencilError
from .expr import Expression, derivatives, evaluate, parse
from .geodesic import GeodesicProblem, Trajectory, el_residual, integrate
from .jet_geometry import GeometryConfig, JetPoint, fstar, metric

__version__ = "0.1.0"
