"""Exact branch-and-price solver for partitioning a graph into length-constrained cycles."""

from .bnb import SolveResult, SolveStats, greedy_primal, solve
from .config import COVER, PARTITION, SolverConfig, variant
from .cycles import BranchDecision, Cycle
from .instance import (
    CyclePartition,
    Instance,
    InstanceError,
    generate_euclidean,
    generate_uniform,
    load_instance,
    metric_closure,
    validate_partition,
)

__all__ = [
    "BranchDecision",
    "COVER",
    "Cycle",
    "CyclePartition",
    "Instance",
    "InstanceError",
    "PARTITION",
    "SolveResult",
    "SolveStats",
    "SolverConfig",
    "generate_euclidean",
    "generate_uniform",
    "greedy_primal",
    "load_instance",
    "metric_closure",
    "solve",
    "validate_partition",
    "variant",
]
