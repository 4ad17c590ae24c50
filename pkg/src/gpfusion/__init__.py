"""Greedy pursuits (OMP, SP), their fusion (FuGP, IFuGP) and a Monte Carlo harness."""

__version__ = "0.1.0"

from .core import SparseEstimate, least_squares_on_support, matched_filter, top_k_magnitude
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    EmptyAggregate,
    GPFusionError,
    InsufficientCandidates,
    InvalidInitialSupport,
    RankDeficient,
)
from .pursuits import ALGORITHMS, PursuitConfig, fugp, ifugp, omp, recover, sp

__all__ = [
    "ALGORITHMS",
    "ConfigInvalid",
    "DimensionMismatch",
    "EmptyAggregate",
    "GPFusionError",
    "InsufficientCandidates",
    "InvalidInitialSupport",
    "PursuitConfig",
    "RankDeficient",
    "SparseEstimate",
    "fugp",
    "ifugp",
    "least_squares_on_support",
    "matched_filter",
    "omp",
    "recover",
    "sp",
    "top_k_magnitude",
]
