"""Exact discrete discrepancy of point sets for corners, toroidal cubes and toroidal balls."""

from .errors import CapExceededError, DimensionMismatchError, GridDiscError, HypothesisRefusal, PreconditionError
from .geometry import GridSpec, PointSet, SnappedSet

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "DimensionMismatchError",
    "GridDiscError",
    "GridSpec",
    "HypothesisRefusal",
    "PointSet",
    "PreconditionError",
    "SnappedSet",
]
