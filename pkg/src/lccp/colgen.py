"""Column generation at one branch-and-bound node."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .config import COVER, SolverConfig, ceil_tol
from .cycles import BranchDecision, Cycle, respects_decisions, split_decisions
from .labeling import PricingConfig, PricingConstraints, PricingStats, PricingTimeout, price_all
from .lp import EQUAL, GREATER_EQUAL, INFEASIBLE, LpNumericalError, LpOutcome, LpProblem, solve_lp

log = logging.getLogger(__name__)

CONVERGED = "converged"
CG_INFEASIBLE = "infeasible"
BOUND_PRUNED = "bound_pruned"
LIMIT_HIT = "limit_hit"

ELIMINATION_TOL = 1e-9


class ColumnPool:
    """All cycles generated so far; ids are insertion positions and never change."""

    def __init__(self, n: int):
        self.n = n
        self.columns: list[Cycle] = []
        self._index: dict[tuple, int] = {}

    def add(self, cyc: Cycle) -> tuple[int, bool]:
        """Insert unless an identical cycle exists; returns (id, inserted)."""
        idx = self._index.get(cyc.nodes)
        if idx is not None:
            return idx, False
        idx = len(self.columns)
        self.columns.append(cyc)
        self._index[cyc.nodes] = idx
        return idx, True

    def __len__(self) -> int:
        return len(self.columns)

    def __contains__(self, cyc: Cycle) -> bool:
        return cyc.nodes in self._index

    def active_ids(self, decisions: Sequence[BranchDecision]) -> list[int]:
        mask = filter_columns(self, decisions)
        return [i for i, ok in enumerate(mask) if ok]


def filter_columns(pool: ColumnPool, decisions: Sequence[BranchDecision]) -> list[bool]:
    """Active flag per pool column under the given edge decisions."""
    forced, forbidden = split_decisions(decisions)
    if not forced and not forbidden:
        return [True] * len(pool)
    return [respects_decisions(c.nodes, forced, forbidden) for c in pool.columns]


@dataclass
class CgStats:
    pricing_rounds: int = 0
    heuristic_rounds: int = 0
    exact_rounds: int = 0
    farkas_rounds: int = 0
    columns_added: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    pricing: PricingStats = field(default_factory=PricingStats)

    def add(self, other: "CgStats") -> None:
        for name in ("pricing_rounds", "heuristic_rounds", "exact_rounds", "farkas_rounds",
                     "columns_added", "lp_solves", "lp_iterations"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.pricing.add(other.pricing)


@dataclass
class CgResult:
    status: str
    lp_objective: Optional[float] = None
    lagrangian_lb: int = 0
    primal: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    active: list = field(default_factory=list)
    stats: CgStats = field(default_factory=CgStats)


def lagrangian_bound(z_rmp: float, per_start_minima: Sequence[float]) -> int:
    """Rounded-up Lagrangian bound; per-start minima only count when negative."""
    total = z_rmp
    for z in per_start_minima:
        if z < 0:
            total += z
    return ceil_tol(total)


def solve_rmp(pool: ColumnPool, active: Sequence[int], inst, covering: bool,
              warm_start=None) -> LpOutcome:
    A = np.zeros((inst.n, len(active)))
    for j, cid in enumerate(active):
        A[list(pool.columns[cid].nodes), j] = 1.0
    sense = GREATER_EQUAL if covering else EQUAL
    return solve_lp(LpProblem(A, [sense] * inst.n), warm_start=warm_start)


def _pricing_configs(cfg: SolverConfig) -> tuple[PricingConfig, PricingConfig]:
    exact = PricingConfig(
        bidirectional=cfg.bidirectional,
        heuristic_dominance=False,
        max_cycles_returned=cfg.max_columns_per_round,
        redcost_tolerance=cfg.redcost_tolerance,
        symmetry_breaking=cfg.symmetry_breaking,
    )
    return replace(exact, heuristic_dominance=True), exact


def _node_elimination(inst, cfg: SolverConfig, decisions, duals) -> Optional[frozenset]:
    """Nodes kept in pricing; zero-dual nodes can be skipped on metric covering problems.

    Shortcutting a node out of a cycle may cross a forbidden edge or break a
    forced one, so the reduction is only applied where no decisions exist.
    """
    if not (cfg.node_elimination and cfg.mode == COVER and inst.is_metric) or decisions:
        return None
    return frozenset(i for i in range(inst.n) if duals[i] > ELIMINATION_TOL)


def farkas_round(decisions: Sequence[BranchDecision], pool: ColumnPool, inst, ray: np.ndarray,
                 cfg: SolverConfig, executor=None, stats: Optional[CgStats] = None,
                 deadline: Optional[float] = None) -> list[Cycle]:
    """Columns with positive ray score sum(ray[i] for i in C); empty means the node is infeasible."""
    if ray is None or not np.any(ray > 0):
        raise LpNumericalError("Farkas ray has no positive entry")
    forced, forbidden = split_decisions(decisions)
    _, exact = _pricing_configs(cfg)
    res = price_all(ray, inst, PricingConstraints(forbidden, forced), exact, executor, offset=0.0,
                    deadline=deadline)
    if stats is not None:
        stats.farkas_rounds += 1
        stats.pricing.add(res.stats)
    return res.cycles


def initialize_root_pool(inst, heuristic_solution=None) -> ColumnPool:
    """Singletons plus the cycles of a primal heuristic solution (greedy by default)."""
    if heuristic_solution is None:
        from .bnb import greedy_primal

        heuristic_solution = greedy_primal(inst)
    pool = ColumnPool(inst.n)
    for i in range(inst.n):
        pool.add(Cycle((i,), 0.0, inst.crit_list[i], 0.0))
    for c in heuristic_solution.cycles:
        pool.add(c)
    return pool


def generate_columns(decisions: Sequence[BranchDecision], pool: ColumnPool, inst, cfg: SolverConfig, *,
                     incumbent: float = math.inf, lower_bound: int = 0, executor=None,
                     deadline: Optional[float] = None, first_outcome: Optional[LpOutcome] = None,
                     active: Optional[list] = None) -> CgResult:
    """Solve the node LP by column generation.

    Each round solves the restricted master; an infeasible master triggers
    Farkas pricing, otherwise heuristic pricing runs first and exact pricing
    only when the heuristic finds nothing. Exact rounds update the Lagrangian
    bound, and the node is abandoned once that bound reaches ``incumbent``.
    """
    stats = CgStats()
    forced, forbidden = split_decisions(decisions)
    covering = cfg.mode == COVER
    heur_cfg, exact_cfg = _pricing_configs(cfg)
    active = list(pool.active_ids(decisions) if active is None else active)
    in_active = set(active)
    lb = lower_bound
    basis = None
    out = first_outcome

    def admit(cycles) -> int:
        added = 0
        for cyc in cycles:
            cid, _ = pool.add(cyc)
            if cid not in in_active:
                in_active.add(cid)
                active.append(cid)
                added += 1
        stats.columns_added += added
        return added

    while True:
        if stats.pricing_rounds >= cfg.max_pricing_rounds:
            return CgResult(LIMIT_HIT, None, lb, active=active, stats=stats)
        if deadline is not None and time.monotonic() > deadline:
            return CgResult(LIMIT_HIT, None, lb, active=active, stats=stats)
        if out is None:
            out = solve_rmp(pool, active, inst, covering, basis)
            stats.lp_solves += 1
            stats.lp_iterations += out.iterations
        if out.status == INFEASIBLE:
            try:
                cols = farkas_round(decisions, pool, inst, out.farkas_ray, cfg, executor, stats, deadline)
            except PricingTimeout:
                return CgResult(LIMIT_HIT, None, lb, active=active, stats=stats)
            stats.pricing_rounds += 1
            if not admit(cols):
                if cols:
                    raise LpNumericalError("Farkas pricing only returned columns already in the master")
                return CgResult(CG_INFEASIBLE, None, lb, active=active, stats=stats)
            out, basis = None, None
            continue

        basis = out.basis
        duals = out.duals
        z = out.objective
        allowed = _node_elimination(inst, cfg, decisions, duals)
        cons = PricingConstraints(forbidden, forced, allowed_nodes=allowed)
        if cfg.heuristic_pricing:
            try:
                res = price_all(duals, inst, cons, heur_cfg, executor, deadline=deadline)
            except PricingTimeout:
                return CgResult(LIMIT_HIT, None, lb, active=active, stats=stats)
            stats.pricing_rounds += 1
            stats.heuristic_rounds += 1
            stats.pricing.add(res.stats)
            if admit(res.cycles):
                out = None
                continue
        try:
            res = price_all(duals, inst, cons, exact_cfg, executor, deadline=deadline)
        except PricingTimeout:
            return CgResult(LIMIT_HIT, None, lb, active=active, stats=stats)
        stats.pricing_rounds += 1
        stats.exact_rounds += 1
        stats.pricing.add(res.stats)
        lb = max(lb, lagrangian_bound(z, res.minima))
        if lb >= incumbent:
            return CgResult(BOUND_PRUNED, z, lb, out.primal, duals, active, stats)
        if not admit(res.cycles):
            if res.cycles:
                log.warning("exact pricing returned only known columns (min reduced cost %.3g); "
                            "treating the master as converged", res.cycles[0].redcost)
            return CgResult(CONVERGED, z, lb, out.primal, duals, active, stats)
        out = None
