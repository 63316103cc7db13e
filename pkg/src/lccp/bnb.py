"""Branch-and-price driver.

Nodes of the search tree carry edge decisions (forced or forbidden edges).
Each node solves its LP by column generation unless early branching applies,
branches on the most used undecided edge of a fractional solution, and is
fathomed once its rounded-up bound reaches the incumbent.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

from .colgen import (
    BOUND_PRUNED,
    CG_INFEASIBLE,
    LIMIT_HIT,
    CgStats,
    ColumnPool,
    generate_columns,
    initialize_root_pool,
    solve_rmp,
)
from .config import COVER, INTEGRALITY_TOL, SolverConfig, ceil_tol
from .cycles import BranchDecision, Cycle, Edge, canonical, cycle_time, edge
from .instance import CyclePartition, Instance, relabel_by_critical_time, validate_partition
from .lp import INFEASIBLE

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
TIMEOUT = "timeout"


@dataclass
class TreeNode:
    id: int
    parent: Optional[int]
    decisions: tuple = ()
    parent_lb: int = 0
    depth: int = 0
    estimate: float = 0.0

    def decided_edges(self) -> set[Edge]:
        return {d.edge for d in self.decisions}


@dataclass
class SolveStats:
    nodes_processed: int = 0
    early_branches: int = 0
    lp_iterations: int = 0
    lp_solves: int = 0
    pricing_rounds: int = 0
    farkas_rounds: int = 0
    columns_generated: int = 0
    labels_generated: int = 0
    labels_extended: int = 0
    labels_dominated: int = 0
    merges_attempted: int = 0
    wall_time: float = 0.0
    root_lp: Optional[float] = None
    root_bound: Optional[int] = None
    heuristic_objective: Optional[int] = None
    lower_bound: Optional[int] = None
    upper_bound: Optional[int] = None

    def absorb(self, cg: CgStats) -> None:
        self.lp_iterations += cg.lp_iterations
        self.lp_solves += cg.lp_solves
        self.pricing_rounds += cg.pricing_rounds
        self.farkas_rounds += cg.farkas_rounds
        self.columns_generated += cg.columns_added
        self.labels_generated += cg.pricing.labels_generated
        self.labels_extended += cg.pricing.labels_extended
        self.labels_dominated += cg.pricing.labels_dominated
        self.merges_attempted += cg.pricing.merges_attempted

    def to_dict(self) -> dict:
        return asdict(self)


class SolveResult(NamedTuple):
    partition: CyclePartition
    stats: SolveStats
    status: str


# --------------------------------------------------------------------------
# primal heuristic
# --------------------------------------------------------------------------


def greedy_primal(inst: Instance) -> CyclePartition:
    """Cheapest-insertion cycles seeded at the most critical unassigned node.

    Each cycle starts from the unassigned node with the smallest critical time
    and absorbs unassigned nodes by cheapest insertion while the length
    constraint holds.
    """
    travel, crit = inst.travel_rows, inst.crit_list
    unassigned = set(range(inst.n))
    cycles = []
    while unassigned:
        seed = min(unassigned, key=lambda i: (crit[i], i))
        unassigned.discard(seed)
        tour = [seed]
        t, q = 0.0, crit[seed]
        rejected: set[int] = set()
        while True:
            best = None
            for u in sorted(unassigned - rejected):
                qu = min(q, crit[u])
                for k in range(len(tour)):
                    a, b = tour[k], tour[(k + 1) % len(tour)]
                    if len(tour) == 1:
                        nt = 2 * travel[a][u]
                    else:
                        nt = t - travel[a][b] + travel[a][u] + travel[u][b]
                    if nt <= qu and (best is None or nt - t < best[0]):
                        best = (nt - t, u, k + 1, nt, qu)
            if best is None:
                break
            _, u, pos, nt, nq = best
            trial = tour[:pos] + [u] + tour[pos:]
            # the incremental time can differ from the canonical sum by rounding
            if cycle_time(canonical(trial), travel) > nq:
                rejected.add(u)
                continue
            tour, t, q = trial, nt, nq
            unassigned.discard(u)
        cycles.append(Cycle.from_nodes(tour, inst))
    return CyclePartition(cycles)


# --------------------------------------------------------------------------
# branching
# --------------------------------------------------------------------------


def _is_integral(x: float) -> bool:
    return abs(x - round(x)) <= INTEGRALITY_TOL


def select_branching_edge(primal: Sequence[float], columns: Sequence[Cycle],
                          decided: Optional[set] = None) -> Optional[Edge]:
    """Most used undecided edge of a fractional solution (ties: smallest edge).

    Edge usage sums the column values of the cycles using it; a 2-cycle counts
    twice. Singletons use no edge. Returns None when every used edge is decided.
    """
    if all(_is_integral(x) for x in primal):
        raise ValueError("branching requested on an integral solution")
    decided = decided or set()
    usage: dict[Edge, float] = {}
    for x, c in zip(primal, columns):
        if x <= INTEGRALITY_TOL or len(c) < 2:
            continue
        w = 2.0 * x if len(c) == 2 else x
        for e in c.edges:
            usage[e] = usage.get(e, 0.0) + w
    best, best_val = None, 0.0
    for e in sorted(usage):
        if e in decided:
            continue
        if usage[e] > best_val + 1e-9:
            best, best_val = e, usage[e]
    return best


def branch(node: TreeNode, e: Edge, next_id: int, estimate: float = 0.0) -> tuple[TreeNode, TreeNode]:
    """(force child, forbid child); both inherit the parent's bound."""
    e = edge(*e)
    if e in node.decided_edges():
        raise ValueError(f"edge {e} is already decided at node {node.id}")
    kids = []
    for k, forced in enumerate((True, False)):
        kids.append(TreeNode(next_id + k, node.id, node.decisions + (BranchDecision(e, forced),),
                             node.parent_lb, node.depth + 1, estimate))
    return kids[0], kids[1]


def should_early_branch(node: TreeNode, z_rmp_first: float) -> bool:
    """Skip column generation when the first master value already rounds to the inherited bound."""
    return ceil_tol(z_rmp_first) == node.parent_lb


def select_next_node(open_nodes: list[TreeNode], fresh_children: Sequence[TreeNode] = (),
                     plunges: int = 0, max_plunge: int = 10) -> tuple[TreeNode, bool]:
    """Plunge into a fresh child (force child first) or take the best estimate.

    Returns the node and whether it was a plunge.
    """
    if not open_nodes:
        raise ValueError("no open nodes")
    if plunges < max_plunge:
        ids = {nd.id for nd in open_nodes}
        for child in fresh_children:
            if child.id in ids:
                return child, True
    return min(open_nodes, key=lambda nd: (nd.estimate, nd.id)), False


# --------------------------------------------------------------------------
# integrality and covering repair
# --------------------------------------------------------------------------


def repair_cover(cycles: Sequence[Sequence[int]], inst: Instance) -> list[tuple[int, ...]]:
    """Turn a cover into a partition by removing repeated nodes from all but one cycle.

    Dropping a node and joining its neighbours never lengthens a cycle under
    the triangle inequality. The first cycle (in the given order) that keeps
    every touched cycle length-feasible retains the node.
    """
    travel, crit = inst.travel_rows, inst.crit_list
    cur = [list(c) for c in cycles]

    def ok(nodes):
        return not nodes or cycle_time(nodes, travel) <= min(crit[i] for i in nodes)

    for v in range(inst.n):
        holders = [k for k, c in enumerate(cur) if v in c]
        if len(holders) <= 1:
            continue
        for keep in holders:
            trial = {k: [u for u in cur[k] if u != v] for k in holders if k != keep}
            if all(ok(nodes) for nodes in trial.values()):
                for k, nodes in trial.items():
                    cur[k] = nodes
                break
        else:
            raise RuntimeError(f"could not remove duplicate node {v} from the cover")
    return [canonical(c) for c in cur if c]


def check_integrality(primal: Sequence[float], columns: Sequence[Cycle], inst: Instance,
                      covering: bool = False) -> Optional[CyclePartition]:
    """Partition from an integral master solution, or None if any value is fractional."""
    if not all(_is_integral(x) for x in primal):
        return None
    chosen = [c.nodes for x, c in zip(primal, columns) if x > 0.5]
    if covering:
        chosen = repair_cover(chosen, inst)
    part = CyclePartition.from_node_lists(inst, chosen)
    verdict = validate_partition(inst, part)
    if not verdict:
        raise RuntimeError(f"integral master solution is not a valid partition: {verdict.message}")
    return part


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def _executor(workers: int):
    if workers <= 1:
        return None
    return ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("fork"))


def solve(inst: Instance, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Minimum cycle partition by branch and price.

    Status is ``optimal`` or ``timeout``; on timeout the best partition found
    and the best proven lower bound are reported in the stats.
    """
    if cfg.mode == COVER and not inst.is_metric:
        raise ValueError("covering mode requires metric instance")
    t0 = time.monotonic()
    deadline = t0 + cfg.time_limit_s if math.isfinite(cfg.time_limit_s) else None
    stats = SolveStats()
    if cfg.symmetry_sort:
        work, relabel = relabel_by_critical_time(inst)
    else:
        work, relabel = inst, None

    incumbent = greedy_primal(work)
    stats.heuristic_objective = incumbent.objective
    pool = initialize_root_pool(work, incumbent)

    root = TreeNode(0, None)
    open_nodes = [root]
    next_id = 1
    fresh: list[TreeNode] = []
    plunges = 0
    timed_out = False
    pending_bound: Optional[int] = None
    executor = _executor(cfg.workers)
    try:
        while open_nodes:
            if deadline is not None and time.monotonic() > deadline:
                timed_out = True
                break
            open_nodes = [nd for nd in open_nodes if nd.parent_lb < incumbent.objective]
            if not open_nodes:
                break
            node, plunged = select_next_node(open_nodes, fresh, plunges, cfg.plunge_depth)
            plunges = plunges + 1 if plunged else 0
            open_nodes.remove(node)
            fresh = []
            stats.nodes_processed += 1

            outcome = _process_node(node, pool, work, cfg, incumbent.objective, executor, deadline, stats)
            if outcome.status == LIMIT_HIT:
                timed_out = True
                pending_bound = node.parent_lb
                break
            if outcome.partition is not None and outcome.partition.objective < incumbent.objective:
                incumbent = outcome.partition
                log.info("node %d: new incumbent with %d cycles", node.id, incumbent.objective)
            if outcome.branch_edge is None:
                continue
            bound = outcome.bound
            estimate = bound + 0.5 * outcome.n_fractional
            parent = TreeNode(node.id, node.parent, node.decisions, bound, node.depth, node.estimate)
            force, forbid = branch(parent, outcome.branch_edge, next_id, estimate)
            next_id += 2
            open_nodes += [force, forbid]
            fresh = [force, forbid]
    finally:
        if executor is not None:
            executor.shutdown()

    open_bounds = [nd.parent_lb for nd in open_nodes if nd.parent_lb < incumbent.objective]
    if pending_bound is not None and pending_bound < incumbent.objective:
        open_bounds.append(pending_bound)
    status = TIMEOUT if timed_out and open_bounds else OPTIMAL
    lower = min(open_bounds) if status == TIMEOUT else incumbent.objective

    part = incumbent
    if relabel is not None:
        part = relabel.map_partition(incumbent, inst, inverse=True)
    verdict = validate_partition(inst, part)
    if not verdict:
        raise RuntimeError(f"final partition is invalid: {verdict.message}")
    stats.lower_bound = lower
    stats.upper_bound = part.objective
    stats.wall_time = time.monotonic() - t0
    return SolveResult(part, stats, status)


@dataclass
class _NodeOutcome:
    status: str = "done"
    bound: int = 0
    partition: Optional[CyclePartition] = None
    branch_edge: Optional[Edge] = None
    n_fractional: int = 0


def _process_node(node: TreeNode, pool: ColumnPool, inst: Instance, cfg: SolverConfig, incumbent: int,
                  executor, deadline, stats: SolveStats) -> _NodeOutcome:
    covering = cfg.mode == COVER
    active = pool.active_ids(node.decisions)
    first = None
    primal = None
    bound = node.parent_lb
    if cfg.early_branching and node.parent is not None:
        first = solve_rmp(pool, active, inst, covering)
        stats.lp_solves += 1
        stats.lp_iterations += first.iterations
        if first.status != INFEASIBLE and should_early_branch(node, first.objective):
            stats.early_branches += 1
            primal = first.primal
    if primal is None:
        cg = generate_columns(node.decisions, pool, inst, cfg, incumbent=incumbent, lower_bound=node.parent_lb,
                              executor=executor, deadline=deadline, first_outcome=first, active=active)
        stats.absorb(cg.stats)
        if cg.status == LIMIT_HIT:
            return _NodeOutcome(LIMIT_HIT, bound)
        if node.parent is None:
            stats.root_lp = cg.lp_objective
        if cg.status in (CG_INFEASIBLE, BOUND_PRUNED):
            bound = max(bound, cg.lagrangian_lb)
            if node.parent is None:
                stats.root_bound = bound
            return _NodeOutcome(cg.status, bound)
        active = cg.active
        primal = cg.primal
        bound = max(bound, cg.lagrangian_lb, ceil_tol(cg.lp_objective))
        if node.parent is None:
            stats.root_bound = bound
    if bound >= incumbent:
        return _NodeOutcome("pruned", bound)
    columns = [pool.columns[i] for i in active]
    part = check_integrality(primal, columns, inst, covering)
    if part is not None:
        return _NodeOutcome("integral", bound, part)
    e = select_branching_edge(primal, columns, node.decided_edges())
    if e is None:
        raise RuntimeError(f"node {node.id}: fractional solution without an undecided edge")
    n_frac = sum(1 for x in primal if not _is_integral(x))
    return _NodeOutcome("branched", bound, None, e, n_frac)
