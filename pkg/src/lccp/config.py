from __future__ import annotations

import math
from dataclasses import dataclass, replace

PARTITION = "partition"
COVER = "cover"

INTEGRALITY_TOL = 1e-6


def ceil_tol(x: float, tol: float = INTEGRALITY_TOL) -> int:
    """Ceiling that treats values within ``tol`` above an integer as that integer."""
    return math.ceil(x - tol)


@dataclass(frozen=True)
class SolverConfig:
    mode: str = PARTITION
    bidirectional: bool = True
    symmetry_sort: bool = True
    # restrict each pricing call to nodes numbered at or above its start
    symmetry_breaking: bool = True
    early_branching: bool = True
    heuristic_pricing: bool = True
    workers: int = 1
    time_limit_s: float = math.inf
    max_columns_per_round: int = 50
    seed: int = 0
    # drop zero-dual nodes from pricing (covering mode on metric instances only)
    node_elimination: bool = True
    max_pricing_rounds: int = 10_000
    plunge_depth: int = 10
    redcost_tolerance: float = 1e-6

    def __post_init__(self):
        if self.mode not in (PARTITION, COVER):
            raise ValueError(f"mode must be {PARTITION!r} or {COVER!r}, got {self.mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.max_columns_per_round < 1:
            raise ValueError("max_columns_per_round must be at least 1")
        if not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be positive")


VARIANT_NAMES = ("full", "nobidir", "nopar", "nosymbr", "noearly", "basic")


def variant(name: str, base: SolverConfig) -> SolverConfig:
    """Ablation variant of ``base`` named like the benchmark columns."""
    if name == "full":
        return base
    if name == "nobidir":
        return replace(base, bidirectional=False)
    if name == "nopar":
        return replace(base, workers=1)
    if name == "nosymbr":
        return replace(base, symmetry_sort=False, symmetry_breaking=False)
    if name == "noearly":
        return replace(base, early_branching=False)
    if name == "basic":
        return replace(base, bidirectional=False, symmetry_sort=False, symmetry_breaking=False,
                       early_branching=False, heuristic_pricing=False, workers=1)
    raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANT_NAMES)}")
