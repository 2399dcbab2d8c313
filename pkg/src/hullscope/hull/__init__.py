from ._backend import BACKEND, KERNELS, get_kernel
from .oracle import MAX_ORACLE_POINTS, oracle_project
from .solver import batch_project, distances, membership, project_to_hull

__all__ = [
    "BACKEND",
    "KERNELS",
    "MAX_ORACLE_POINTS",
    "batch_project",
    "distances",
    "get_kernel",
    "membership",
    "oracle_project",
    "project_to_hull",
]
