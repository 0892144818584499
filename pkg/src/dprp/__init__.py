"""Differentially private, dimension-reduced federated SGD over an analog multiple-access channel."""

from .aircomp import AlignmentError, PowerBudgetError
from .config import ConfigError, ExperimentConfig
from .projection import DimensionError, DistributionKind, achlioptas, gaussian, parse_kind, rademacher

__all__ = [
    "AlignmentError",
    "ConfigError",
    "DimensionError",
    "DistributionKind",
    "ExperimentConfig",
    "PowerBudgetError",
    "achlioptas",
    "gaussian",
    "parse_kind",
    "rademacher",
]

__version__ = "0.1.0"
