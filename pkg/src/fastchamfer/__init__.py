"""Near-linear time (1 + eps)-approximation of the l1 Chamfer distance."""

from .core import (
    PointSet,
    RandomSource,
    RegimeWarning,
    UsageError,
    exact_chamfer,
    exact_nn,
    l1_distance,
)
from .estimator import EstimateReport, amplified_estimate, chamfer_estimate, coarse_estimate
from .formats import ParseError, load_pointset, write_pointset

__all__ = [
    "PointSet",
    "RandomSource",
    "RegimeWarning",
    "UsageError",
    "ParseError",
    "exact_chamfer",
    "exact_nn",
    "l1_distance",
    "EstimateReport",
    "chamfer_estimate",
    "amplified_estimate",
    "coarse_estimate",
    "load_pointset",
    "write_pointset",
]
