"""Rectifiability diagnostics for finite weighted metric spaces."""

from .errors import DomainError, PreconditionError, ShapeError, SolverError
from .metric import FiniteMetricSpace, MeasuredSpace, PointedMeasuredSpace, validate_metric

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FiniteMetricSpace",
    "MeasuredSpace",
    "PointedMeasuredSpace",
    "PreconditionError",
    "ShapeError",
    "SolverError",
    "validate_metric",
    "__version__",
]
