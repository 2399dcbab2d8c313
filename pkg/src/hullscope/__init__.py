"""Convex-hull geometry of training sets: projections, distances, diameters."""

from .hull import (
    BACKEND,
    batch_project,
    membership,
    oracle_project,
    project_to_hull,
)
from .types import (
    DimensionError,
    PointSet,
    ProjectionResult,
    SimplexCoefficients,
    SolverConfig,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DimensionError",
    "PointSet",
    "ProjectionResult",
    "SimplexCoefficients",
    "SolverConfig",
    "batch_project",
    "membership",
    "oracle_project",
    "project_to_hull",
]
