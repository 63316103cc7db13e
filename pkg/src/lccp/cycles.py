"""Cycle representation shared by the pricing engine, the master problem and the oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

Edge = tuple[int, int]


class BranchDecision(NamedTuple):
    edge: Edge
    forced: bool


def split_decisions(decisions: Iterable[BranchDecision]) -> tuple[frozenset, frozenset]:
    """(forced edges, forbidden edges) of a decision list."""
    forced, forbidden = set(), set()
    for d in decisions or ():
        (forced if d.forced else forbidden).add(edge(*d.edge))
    return frozenset(forced), frozenset(forbidden)


def edge(i: int, j: int) -> Edge:
    """Unordered edge as a sorted pair."""
    return (i, j) if i < j else (j, i)


def canonical(nodes: Sequence[int]) -> tuple[int, ...]:
    """Unique representative of an undirected cycle.

    The smallest node comes first; for three or more nodes the traversal
    direction is chosen so that the second node is smaller than the last.
    """
    nodes = tuple(nodes)
    if len(nodes) <= 2:
        return tuple(sorted(nodes))
    k = nodes.index(min(nodes))
    rot = nodes[k:] + nodes[:k]
    if rot[1] > rot[-1]:
        rot = (rot[0],) + tuple(reversed(rot[1:]))
    return rot


def cycle_edges(nodes: Sequence[int]) -> set[Edge]:
    """Edges used by a cycle. A 2-cycle uses its single edge (twice); a singleton none."""
    k = len(nodes)
    if k < 2:
        return set()
    return {edge(nodes[i], nodes[(i + 1) % k]) for i in range(k)}


def cycle_time(nodes: Sequence[int], travel) -> float:
    """Traversal time including the closing edge, summed in the given order."""
    k = len(nodes)
    if k < 2:
        return 0.0
    total = 0.0
    for i in range(k):
        total += travel[nodes[i]][nodes[(i + 1) % k]]
    return total


def respects_decisions(nodes: Sequence[int], forced: Iterable[Edge], forbidden: Iterable[Edge]) -> bool:
    """Branching compatibility of a cycle.

    A forbidden edge must not be used. For a forced edge {i, j}, a cycle that
    contains i or j must use the edge.
    """
    used = cycle_edges(nodes)
    members = set(nodes)
    for e in forbidden:
        if e in used:
            return False
    for e in forced:
        if (e[0] in members or e[1] in members) and e not in used:
            return False
    return True


@dataclass(frozen=True, order=False)
class Cycle:
    """A length-feasible cycle in canonical form; equality and hashing use the node order only."""

    nodes: tuple[int, ...]
    time: float = field(default=0.0, compare=False)
    min_crit: float = field(default=0.0, compare=False)
    redcost: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("a cycle needs at least one node")
        if canonical(self.nodes) != tuple(self.nodes):
            raise ValueError(f"cycle {self.nodes} is not in canonical form")

    @classmethod
    def from_nodes(cls, nodes: Sequence[int], inst, redcost: float = 0.0) -> "Cycle":
        nodes = canonical(nodes)
        return cls(
            nodes,
            cycle_time(nodes, inst.travel_rows),
            min(inst.crit_list[i] for i in nodes),
            redcost,
        )

    @property
    def mask(self) -> int:
        m = 0
        for i in self.nodes:
            m |= 1 << i
        return m

    @property
    def edges(self) -> set[Edge]:
        return cycle_edges(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: int) -> bool:
        return node in self.nodes
