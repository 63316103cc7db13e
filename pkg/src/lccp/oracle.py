"""Brute-force ground truth for small instances.

Everything here is deliberately naive and independent of the pricing engine
and of the simplex code: cycles are enumerated by depth-first search, the
optimal partition comes from a subset DP over Held-Karp feasibility, and the
full master LP is handed to scipy's HiGHS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .cycles import BranchDecision, Cycle, cycle_time, respects_decisions, split_decisions

MAX_ORACLE_NODES = 12


class OracleSizeError(ValueError):
    pass


def _guard(inst) -> None:
    if inst.n > MAX_ORACLE_NODES:
        raise OracleSizeError(f"oracle is limited to {MAX_ORACLE_NODES} nodes, instance has {inst.n}")


@dataclass
class CycleCatalog:
    cycles: list[Cycle]
    by_mask: dict[int, list[Cycle]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.by_mask:
            for c in self.cycles:
                self.by_mask.setdefault(c.mask, []).append(c)

    def __len__(self) -> int:
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)


def enumerate_cycles(inst, decisions: Optional[Sequence[BranchDecision]] = None) -> CycleCatalog:
    """All length-feasible cycles in canonical form, optionally filtered by branching decisions."""
    _guard(inst)
    n = inst.n
    travel, crit = inst.travel_rows, inst.crit_list
    forced, forbidden = split_decisions(decisions)
    out: list[Cycle] = []

    def emit(path):
        t = cycle_time(path, travel)
        q = min(crit[i] for i in path)
        if t <= q and respects_decisions(path, forced, forbidden):
            out.append(Cycle(tuple(path), t, q))

    def dfs(path, t, q):
        last = path[-1]
        for j in range(path[0] + 1, n):
            if j in path:
                continue
            t2 = t + travel[last][j]
            q2 = min(q, crit[j])
            if t2 > q2:
                continue
            path.append(j)
            if len(path) == 2 or path[1] < path[-1]:
                emit(path)
            dfs(path, t2, q2)
            path.pop()

    for s in range(n):
        emit([s])
        dfs([s], 0.0, crit[s])
    return CycleCatalog(out)


def feasible_node_sets(inst) -> list[bool]:
    """feasible[mask]: some length-feasible cycle visits exactly the nodes of ``mask``.

    Held-Karp per lowest node: shortest Hamiltonian path time from the lowest
    node through the set, closed back to it.
    """
    _guard(inst)
    n = inst.n
    travel, crit = inst.travel_rows, inst.crit_list
    full = 1 << n
    feasible = [False] * full
    min_crit = [math.inf] * full
    for mask in range(1, full):
        low = (mask & -mask).bit_length() - 1
        min_crit[mask] = min(min_crit[mask & (mask - 1)], crit[low])
    for s in range(n):
        feasible[1 << s] = True
        # dp[(mask, v)]: shortest s -> v path visiting exactly mask (mask contains s)
        dp: dict[tuple[int, int], float] = {}
        for v in range(s + 1, n):
            dp[(1 << s) | (1 << v), v] = travel[s][v]
        higher = [v for v in range(s + 1, n)]
        # masks in increasing popcount order via increasing integer order works since
        # adding a bit always increases the integer value
        for mask in range(1 << s, full):
            if not mask >> s & 1 or mask & ((1 << s) - 1):
                continue
            best_close = math.inf
            for v in higher:
                key = (mask, v)
                if key not in dp:
                    continue
                tv = dp[key]
                if tv > min_crit[mask]:
                    continue
                best_close = min(best_close, tv + travel[v][s])
                for w in higher:
                    if mask >> w & 1:
                        continue
                    nk = (mask | (1 << w), w)
                    nt = tv + travel[v][w]
                    if nt < dp.get(nk, math.inf):
                        dp[nk] = nt
            if best_close <= min_crit[mask]:
                feasible[mask] = True
    return feasible


def optimal_partition(inst, decisions: Optional[Sequence[BranchDecision]] = None) -> float:
    """Minimum number of cycles; ``inf`` when no partition respects the decisions.

    Without decisions, node-set feasibility comes from Held-Karp; with
    decisions, from the enumerated catalog.
    """
    _guard(inst)
    n = inst.n
    full = (1 << n) - 1
    if decisions:
        feasible = [False] * (full + 1)
        for c in enumerate_cycles(inst, decisions):
            feasible[c.mask] = True
    else:
        feasible = feasible_node_sets(inst)
    f = [math.inf] * (full + 1)
    f[0] = 0
    for S in range(1, full + 1):
        low = S & -S
        rest = S ^ low
        # every subset of S that contains the lowest node
        sub = rest
        best = math.inf
        while True:
            C = sub | low
            if feasible[C] and f[S ^ C] + 1 < best:
                best = f[S ^ C] + 1
            if sub == 0:
                break
            sub = (sub - 1) & rest
        f[S] = best
    return f[full]


def min_redcost(inst, duals: Sequence[float], start: int,
                decisions: Optional[Sequence[BranchDecision]] = None,
                catalog: Optional[CycleCatalog] = None) -> float:
    """Smallest 1 - sum(duals) over cycles whose lowest node is ``start``; ``inf`` if none."""
    _guard(inst)
    if catalog is None:
        catalog = enumerate_cycles(inst, decisions)
    best = math.inf
    for c in catalog:
        if c.nodes[0] != start:
            continue
        rc = 1.0 - sum(duals[i] for i in c.nodes)
        best = min(best, rc)
    return best


def full_lp_value(inst, covering: bool = False,
                  decisions: Optional[Sequence[BranchDecision]] = None) -> float:
    """Optimum of the master LP over every feasible cycle, solved by HiGHS; ``inf`` if infeasible."""
    cat = enumerate_cycles(inst, decisions)
    n = inst.n
    if not len(cat):
        return math.inf
    A = np.zeros((n, len(cat)))
    for j, c in enumerate(cat):
        A[list(c.nodes), j] = 1.0
    c = np.ones(len(cat))
    if covering:
        res = linprog(c, A_ub=-A, b_ub=-np.ones(n), bounds=(0, None), method="highs")
    else:
        res = linprog(c, A_eq=A, b_eq=np.ones(n), bounds=(0, None), method="highs")
    if res.status == 2:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return float(res.fun)
