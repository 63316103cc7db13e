"""Label-setting pricing for length-constrained prize-collecting cycles.

For a fixed start node ``s`` the search grows paths out of ``s`` as labels
``(node set, end, reduced cost, time, min critical time)``. Labels that can no
longer close into a length-feasible cycle are dropped, and labels are pruned
by dominance within a bucket per end node. In bidirectional mode labels are
only extended up to half their critical time and complete cycles are
obtained by merging two half paths that meet at the same end node; in
monodirectional mode every label is closed back to ``s`` directly.

Branching decisions reach the search as forbidden and forced edges. To keep
dominance sound under forced edges every label also records which forced
partner its end node still owes (``need``) and which forced partners of the
start node were not taken by the first edge (``open_start``).
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .cycles import Cycle, canonical, cycle_time, respects_decisions


# labels processed between two clock reads when a deadline is set
DEADLINE_CHECK_EVERY = 256


class PricingTimeout(Exception):
    """The deadline passed during a label search."""


@dataclass(frozen=True)
class PricingConstraints:
    forbidden_edges: frozenset = frozenset()
    forced_edges: frozenset = frozenset()
    min_start: int = 0
    allowed_nodes: Optional[frozenset] = None

    def __post_init__(self):
        if self.forbidden_edges & self.forced_edges:
            raise ValueError("an edge cannot be both forced and forbidden")


@dataclass(frozen=True)
class PricingConfig:
    bidirectional: bool = True
    heuristic_dominance: bool = False
    max_cycles_returned: int = 50
    redcost_tolerance: float = 1e-6
    # skip nodes numbered below the start node
    symmetry_breaking: bool = True

    def __post_init__(self):
        if self.max_cycles_returned < 1:
            raise ValueError("max_cycles_returned must be at least 1")
        if not self.redcost_tolerance > 0:
            raise ValueError("redcost_tolerance must be positive")


@dataclass
class PricingStats:
    labels_generated: int = 0
    labels_extended: int = 0
    labels_dominated: int = 0
    merges_attempted: int = 0
    cycles_found: int = 0

    def add(self, other: "PricingStats") -> None:
        self.labels_generated += other.labels_generated
        self.labels_extended += other.labels_extended
        self.labels_dominated += other.labels_dominated
        self.merges_attempted += other.merges_attempted
        self.cycles_found += other.cycles_found


class Label:
    """A path out of the start node. ``mask`` is the node set without the start."""

    __slots__ = ("start", "mask", "end", "redcost", "time", "min_crit", "pred", "need", "open_start", "dead")

    def __init__(self, start, mask, end, redcost, time, min_crit, pred=None, need=0, open_start=0):
        self.start = start
        self.mask = mask
        self.end = end
        self.redcost = redcost
        self.time = time
        self.min_crit = min_crit
        self.pred = pred
        self.need = need
        self.open_start = open_start
        self.dead = False

    @property
    def node_set(self) -> frozenset:
        return frozenset(i for i in range(self.mask.bit_length()) if self.mask >> i & 1)

    def path(self) -> list[int]:
        """Nodes from the start to the end node."""
        out = []
        lbl = self
        while lbl is not None:
            out.append(lbl.end)
            lbl = lbl.pred
        out.reverse()
        return out

    def __repr__(self):
        return (f"Label({sorted(self.node_set)}, end={self.end}, redcost={self.redcost:.6g}, "
                f"time={self.time:.6g}, min_crit={self.min_crit:.6g})")


class _Context:
    """Per-start lookup tables shared by the extension, closing and merge steps."""

    def __init__(self, s: int, duals: Sequence[float], inst, cons: PricingConstraints, offset: float = 1.0):
        n = inst.n
        self.s = s
        self.n = n
        self.travel = inst.travel_rows
        self.crit = inst.crit_list
        self.duals = [float(d) for d in duals]
        if len(self.duals) != n:
            raise ValueError(f"expected {n} duals, got {len(self.duals)}")
        self.offset = offset
        self.cons = cons
        self.min_start = cons.min_start
        allowed = (1 << n) - 1
        if cons.allowed_nodes is not None:
            allowed = 0
            for i in cons.allowed_nodes:
                allowed |= 1 << i
        allowed &= ~((1 << cons.min_start) - 1)
        allowed &= ~(1 << s)
        self.allowed = allowed
        self.forbidden = [0] * n
        for i, j in cons.forbidden_edges:
            self.forbidden[i] |= 1 << j
            self.forbidden[j] |= 1 << i
        self.partners = [0] * n
        for i, j in cons.forced_edges:
            self.partners[i] |= 1 << j
            self.partners[j] |= 1 << i
        self.reachable = allowed | (1 << s)
        self.candidates = [j for j in range(n) if allowed >> j & 1]

    def initial(self) -> Label:
        return Label(self.s, 0, self.s, self.offset, 0.0, self.crit[self.s])

    def extend(self, lbl: Label, j: int) -> Optional[Label]:
        if lbl.mask >> j & 1 or not self.allowed >> j & 1:
            return None
        v = lbl.end
        if self.forbidden[v] >> j & 1:
            return None
        if lbl.need and lbl.need != 1 << j:
            return None
        t = lbl.time + self.travel[v][j]
        q = lbl.min_crit if lbl.min_crit <= self.crit[j] else self.crit[j]
        if t > q:
            return None
        need = self.partners[j] & ~(1 << v)
        if need:
            # the partner must still be reachable as the next node
            if need & lbl.mask or need & ~self.reachable or need & (need - 1):
                return None
        if lbl.pred is None:
            open_start = self.partners[self.s] & ~(1 << j)
        else:
            open_start = lbl.open_start
            if open_start & lbl.mask:
                return None
        return Label(self.s, lbl.mask | (1 << j), j, lbl.redcost - self.duals[j], t, q, lbl, need, open_start)

    def finish(self, nodes: list[int]) -> Optional[Cycle]:
        """Canonicalize, re-check length and decisions, and price a candidate cycle."""
        nodes = canonical(nodes)
        q = min(self.crit[i] for i in nodes)
        t = cycle_time(nodes, self.travel)
        if t > q:
            return None
        if not respects_decisions(nodes, self.cons.forced_edges, self.cons.forbidden_edges):
            return None
        rc = self.offset
        for i in nodes:
            rc -= self.duals[i]
        return Cycle(nodes, t, q, rc)

    def close(self, lbl: Label) -> Optional[Cycle]:
        if lbl.mask == 0:
            return None
        v, s = lbl.end, self.s
        if self.forbidden[v] >> s & 1:
            return None
        if lbl.need & ~(1 << s) or lbl.open_start & ~(1 << v):
            return None
        if lbl.time + self.travel[v][s] > lbl.min_crit:
            return None
        return self.finish(lbl.path())

    def merge_ok(self, a: Label, b: Label) -> bool:
        v = a.end
        if a is b:
            return a.mask == 1 << v
        return a.mask & b.mask == 1 << v

    def merge_cycle(self, a: Label, b: Label) -> Optional[Cycle]:
        if a.time + b.time > min(a.min_crit, b.min_crit):
            return None
        back = b.path()
        nodes = a.path() + back[-2:0:-1]
        return self.finish(nodes)

    def singleton(self) -> Optional[Cycle]:
        return self.finish([self.s])


def _dominates(a: Label, b: Label, heuristic: bool) -> bool:
    return (
        a.redcost <= b.redcost
        and a.time <= b.time
        and (heuristic or not a.mask & ~b.mask)
        and not a.need & ~b.need
        and not a.open_start & ~b.open_start
    )


# --------------------------------------------------------------------------
# single-step operations
# --------------------------------------------------------------------------


def initial_label(s: int, duals: Sequence[float], inst) -> Label:
    """Empty path sitting at the start node: (∅, s, 1, 0, crit[s])."""
    return Label(s, 0, s, 1.0, 0.0, inst.crit_list[s])


def extend(lbl: Label, j: int, duals, inst, cons: PricingConstraints, offset: float = 1.0) -> Optional[Label]:
    """Extend ``lbl`` to node ``j``; None if inadmissible or length-infeasible."""
    return _Context(lbl.start, duals, inst, cons, offset).extend(lbl, j)


def dominates(a: Label, b: Label, heuristic: bool = False) -> bool:
    """Label dominance: same end node, no larger reduced cost and time, subset node set.

    ``heuristic`` drops the subset condition. The forced-edge states are
    compared as subsets as well; without forced edges they are always empty.
    """
    return a.end == b.end and _dominates(a, b, heuristic)


def merge(a: Label, b: Label, duals, inst, offset: float = 1.0) -> Optional[Label]:
    """Join two half paths ending at the same node into a closed label ending at the start."""
    if a.start != b.start or a.end != b.end:
        raise ValueError("merge needs labels with the same start and end node")
    v, s = a.end, a.start
    if a.mask & b.mask != 1 << v:
        raise ValueError(f"labels overlap beyond their shared end node {v}")
    t = a.time + b.time
    q = min(a.min_crit, b.min_crit)
    if t > q:
        return None
    rc = a.redcost + b.redcost - duals[s] + duals[v] - offset
    return Label(s, a.mask | b.mask | (1 << s), s, rc, t, q, a)


def close_cycle(lbl: Label, duals, inst, cons: PricingConstraints) -> Optional[Cycle]:
    """Return to the start node from the end of ``lbl``."""
    return _Context(lbl.start, duals, inst, cons, lbl.redcost + sum(duals[i] for i in lbl.node_set)).close(lbl)


def singleton_cycle(s: int, duals, inst) -> Cycle:
    """The loop at ``s``: time 0, reduced cost 1 - duals[s]."""
    return Cycle((s,), 0.0, inst.crit_list[s], 1.0 - duals[s])


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------


@dataclass
class StartResult:
    cycles: list[Cycle]
    min_redcost: float
    stats: PricingStats = field(default_factory=PricingStats)


def search_from_start(s: int, duals, inst, cons: PricingConstraints, cfg: PricingConfig,
                      offset: float = 1.0, deadline: Optional[float] = None) -> StartResult:
    """Run the label search for one start node.

    Returns every length-feasible cycle through ``s`` found with reduced cost
    below ``-cfg.redcost_tolerance`` and the minimum reduced cost over all
    cycles seen (``inf`` when none is admissible). Raises PricingTimeout once
    ``time.monotonic()`` passes ``deadline``.
    """
    ctx = _Context(s, duals, inst, cons, offset)
    stats = PricingStats()
    heuristic = cfg.heuristic_dominance
    found: dict[tuple, Cycle] = {}
    best = math.inf

    def record(cyc: Optional[Cycle]):
        nonlocal best
        if cyc is None:
            return
        if cyc.redcost < best:
            best = cyc.redcost
        if cyc.redcost < -cfg.redcost_tolerance and cyc.nodes not in found:
            found[cyc.nodes] = cyc

    record(ctx.singleton())

    buckets: list[list[Label]] = [[] for _ in range(ctx.n)]
    queue = deque([ctx.initial()])
    bidir = cfg.bidirectional
    candidates = ctx.candidates
    processed = 0
    while queue:
        lbl = queue.popleft()
        if lbl.dead:
            continue
        processed += 1
        if deadline is not None and processed % DEADLINE_CHECK_EVERY == 0 and time.monotonic() > deadline:
            raise PricingTimeout(f"deadline passed while pricing from node {s}")
        # extend up to and including the halfway point; a strict bound loses
        # cycles whose halves meet exactly at q/2 across a zero-length edge
        if bidir and lbl.time > 0.5 * lbl.min_crit:
            continue
        stats.labels_extended += 1
        targets = candidates
        if lbl.need:
            targets = [lbl.need.bit_length() - 1]
        for j in targets:
            new = ctx.extend(lbl, j)
            if new is None:
                continue
            stats.labels_generated += 1
            if not bidir:
                record(ctx.close(new))
            bucket = buckets[j]
            if any(_dominates(old, new, heuristic) for old in bucket):
                stats.labels_dominated += 1
                continue
            keep = []
            for old in bucket:
                if _dominates(new, old, heuristic):
                    old.dead = True
                    stats.labels_dominated += 1
                else:
                    keep.append(old)
            keep.append(new)
            buckets[j] = keep
            queue.append(new)

    if bidir:
        for v in candidates:
            bucket = buckets[v]
            for ia, a in enumerate(bucket):
                for b in bucket[ia:]:
                    if not ctx.merge_ok(a, b):
                        continue
                    stats.merges_attempted += 1
                    record(ctx.merge_cycle(a, b))

    cycles = sorted(found.values(), key=lambda c: (c.redcost, c.nodes))
    stats.cycles_found = len(cycles)
    return StartResult(cycles, best, stats)


def price_from_start(s: int, duals, inst, cons: PricingConstraints, cfg: PricingConfig,
                     offset: float = 1.0) -> list[Cycle]:
    """Negative reduced-cost cycles through ``s`` that avoid nodes below ``cons.min_start``."""
    return search_from_start(s, duals, inst, cons, cfg, offset).cycles


@dataclass
class PricingResult:
    cycles: list[Cycle]
    minima: list[float]
    stats: PricingStats


def _start_task(args):
    return search_from_start(*args)


def price_all(duals, inst, cons_base: PricingConstraints, cfg: PricingConfig,
              executor=None, offset: float = 1.0, deadline: Optional[float] = None) -> PricingResult:
    """Price from every admissible start node and keep the best columns.

    ``executor`` is an optional ``concurrent.futures`` executor; results are
    merged in start order so the output does not depend on it.
    """
    n = inst.n
    starts = [s for s in range(n) if cons_base.allowed_nodes is None or s in cons_base.allowed_nodes]
    jobs = [
        (s, duals, inst, replace(cons_base, min_start=s if cfg.symmetry_breaking else 0), cfg, offset, deadline)
        for s in starts
    ]
    if executor is None or len(jobs) < 2:
        results = [_start_task(job) for job in jobs]
    else:
        results = list(executor.map(_start_task, jobs))
    minima = [math.inf] * n
    stats = PricingStats()
    pool: dict[tuple, Cycle] = {}
    for s, res in zip(starts, results):
        minima[s] = res.min_redcost
        stats.add(res.stats)
        for c in res.cycles:
            pool.setdefault(c.nodes, c)
    cycles = sorted(pool.values(), key=lambda c: (c.redcost, c.nodes))
    return PricingResult(cycles[: cfg.max_cycles_returned], minima, stats)
