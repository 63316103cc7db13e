"""Instances of the length-constrained cycle partition problem.

An instance is a complete undirected graph given by a symmetric matrix of
travel times and a critical time per node. This module covers reading and
writing instances, random generation, the shortest-path (metric) closure,
relabeling nodes by critical time and checking candidate partitions.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from .cycles import Cycle, canonical, cycle_time

METRIC_RTOL = 1e-9


class InstanceError(ValueError):
    """Malformed or invalid instance data."""


@dataclass(frozen=True, eq=False)
class Instance:
    travel: np.ndarray
    crit: np.ndarray
    is_metric: bool = False
    name: str = ""

    def __post_init__(self):
        travel = np.array(self.travel, dtype=np.float64)
        crit = np.array(self.crit, dtype=np.float64).reshape(-1)
        n = crit.shape[0]
        if n < 1:
            raise InstanceError("instance needs at least one node")
        if travel.shape != (n, n):
            raise InstanceError(f"travel matrix has shape {travel.shape}, expected ({n}, {n})")
        for i in range(n):
            if not math.isfinite(crit[i]) or crit[i] <= 0:
                raise InstanceError(f"critical time of node {i} must be positive, got {crit[i]}")
        for i in range(n):
            if travel[i, i] != 0:
                raise InstanceError(f"travel[{i}][{i}] must be 0, got {travel[i, i]}")
            for j in range(n):
                v = travel[i, j]
                if not math.isfinite(v) or v < 0:
                    raise InstanceError(f"travel[{i}][{j}] must be a nonnegative number, got {v}")
                if v != travel[j, i]:
                    raise InstanceError(
                        f"travel matrix is not symmetric at ({i}, {j}): {v} != {travel[j, i]}"
                    )
        if self.is_metric:
            bad = triangle_violation(travel)
            if bad is not None:
                i, j, k = bad
                raise InstanceError(
                    f"instance flagged metric but travel[{i}][{j}] > travel[{i}][{k}] + travel[{k}][{j}]"
                )
        travel.setflags(write=False)
        crit.setflags(write=False)
        object.__setattr__(self, "travel", travel)
        object.__setattr__(self, "crit", crit)

    @property
    def n(self) -> int:
        return int(self.crit.shape[0])

    # plain-list views for the pure-Python hot loops
    @cached_property
    def travel_rows(self) -> list[list[float]]:
        return self.travel.tolist()

    @cached_property
    def crit_list(self) -> list[float]:
        return self.crit.tolist()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "crit": self.crit_list,
            "travel": self.travel_rows,
            "metric": bool(self.is_metric),
        }


def triangle_violation(travel: np.ndarray, rtol: float = METRIC_RTOL):
    """First (i, j, k) with travel[i][j] > travel[i][k] + travel[k][j], or None."""
    n = travel.shape[0]
    scale = max(1.0, float(travel.max(initial=0.0)))
    for k in range(n):
        via = travel[:, k][:, None] + travel[k, :][None, :]
        viol = travel - via > rtol * scale
        if viol.any():
            i, j = map(int, np.argwhere(viol)[0])
            return i, j, k
    return None


@dataclass
class CyclePartition:
    cycles: list[Cycle] = field(default_factory=list)

    @property
    def objective(self) -> int:
        return len(self.cycles)

    def to_json(self) -> dict:
        return {"objective": self.objective, "cycles": [list(c.nodes) for c in self.cycles]}

    @classmethod
    def from_node_lists(cls, inst: Instance, lists: Iterable[Sequence[int]]) -> "CyclePartition":
        return cls([Cycle.from_nodes(nodes, inst) for nodes in lists])


@dataclass(frozen=True)
class NodeRelabeling:
    forward: tuple[int, ...]
    backward: tuple[int, ...]

    def map_nodes(self, nodes: Sequence[int], inverse: bool = False) -> tuple[int, ...]:
        perm = self.backward if inverse else self.forward
        return canonical([perm[i] for i in nodes])

    def map_partition(self, part: CyclePartition, target: Instance, inverse: bool = False) -> CyclePartition:
        """Rewrite a partition into the other numbering; ``target`` is the instance in that numbering."""
        return CyclePartition.from_node_lists(target, (self.map_nodes(c.nodes, inverse) for c in part.cycles))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    message: str = "ok"

    def __bool__(self) -> bool:
        return self.ok


# --------------------------------------------------------------------------
# I/O
# --------------------------------------------------------------------------


def _parse_float(tok: str, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InstanceError(f"cannot parse {what}: {tok!r}") from None


def load_instance(source, format: str = "text", name: str = "") -> Instance:
    """Read an instance from a path, a text/binary stream or a string.

    ``format`` is ``"text"`` (n, critical times, then the full travel matrix,
    whitespace separated) or ``"json"``.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source).decode("utf-8")
    elif isinstance(source, os.PathLike) or (
        isinstance(source, str) and "\n" not in source and not source.lstrip().startswith("{")
    ):
        with open(source, encoding="utf-8") as fh:
            data = fh.read()
        name = name or str(source)
    elif isinstance(source, str):
        data = source
    else:
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
    if format == "json":
        return _load_json(data, name)
    if format == "text":
        return _load_text(data, name)
    raise InstanceError(f"unknown instance format {format!r}")


def _load_text(data: str, name: str) -> Instance:
    lines = [ln.split() for ln in data.splitlines() if ln.strip()]
    if not lines:
        raise InstanceError("empty instance")
    if len(lines[0]) != 1:
        raise InstanceError("first line must contain only the node count")
    try:
        n = int(lines[0][0])
    except ValueError:
        raise InstanceError(f"cannot parse node count {lines[0][0]!r}") from None
    if n < 1:
        raise InstanceError(f"node count must be at least 1, got {n}")
    if len(lines) != n + 2:
        raise InstanceError(f"expected {n + 2} non-empty lines, got {len(lines)}")
    if len(lines[1]) != n:
        raise InstanceError(f"expected {n} critical times, got {len(lines[1])}")
    crit = [_parse_float(tok, f"critical time of node {i}") for i, tok in enumerate(lines[1])]
    travel = []
    for i, row in enumerate(lines[2:]):
        if len(row) != n:
            raise InstanceError(f"travel row {i} has {len(row)} entries, expected {n}")
        travel.append([_parse_float(tok, f"travel[{i}][{j}]") for j, tok in enumerate(row)])
    return Instance(np.array(travel, dtype=float), np.array(crit, dtype=float), False, name)


def _load_json(data: str, name: str) -> Instance:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InstanceError("JSON instance must be an object")
    for key in ("n", "crit", "travel"):
        if key not in obj:
            raise InstanceError(f"JSON instance lacks {key!r}")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise InstanceError(f"'n' must be a positive integer, got {n!r}")
    crit, travel = obj["crit"], obj["travel"]
    if not isinstance(crit, list) or len(crit) != n:
        raise InstanceError(f"'crit' must be a list of {n} numbers")
    if not isinstance(travel, list) or len(travel) != n:
        raise InstanceError(f"'travel' must be a list of {n} rows")
    for i, row in enumerate(travel):
        if not isinstance(row, list) or len(row) != n:
            raise InstanceError(f"travel row {i} must have {n} entries")
    try:
        t = np.array(travel, dtype=float)
        q = np.array(crit, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"non-numeric entry: {exc}") from None
    return Instance(t, q, bool(obj.get("metric", False)), name)


def dump_instance(inst: Instance, fh: IO[str], format: str = "text") -> None:
    if format == "json":
        json.dump(inst.to_dict(), fh)
        fh.write("\n")
        return
    fh.write(f"{inst.n}\n")
    fh.write(" ".join(repr(float(q)) for q in inst.crit_list) + "\n")
    for row in inst.travel_rows:
        fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def dumps_instance(inst: Instance, format: str = "text") -> str:
    buf = io.StringIO()
    dump_instance(inst, buf, format)
    return buf.getvalue()


def load_solution(source) -> list[list[int]]:
    """Parse solution JSON into node lists, kept in the given traversal order for validation."""
    if hasattr(source, "read"):
        obj = json.load(source)
    else:
        with open(source, encoding="utf-8") as fh:
            obj = json.load(fh)
    cycles = obj.get("cycles")
    if not isinstance(cycles, list):
        raise InstanceError("solution JSON lacks a 'cycles' list")
    return [list(map(int, c)) for c in cycles]


# --------------------------------------------------------------------------
# generation and transforms
# --------------------------------------------------------------------------


def generate_euclidean(n: int, seed: int, coord_range: float = 100.0,
                       crit_low: float = 100.0, crit_high: float = 300.0) -> Instance:
    """Random points in a square; travel times are Euclidean distances."""
    if n < 1:
        raise InstanceError("n must be at least 1")
    if not (crit_low > 0 and crit_low <= crit_high):
        raise InstanceError(f"need 0 < crit_low <= crit_high, got {crit_low}, {crit_high}")
    if coord_range < 0:
        raise InstanceError("coord_range must be nonnegative")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, coord_range, size=(n, 2))
    crit = rng.uniform(crit_low, crit_high, size=n)
    diff = xy[:, None, :] - xy[None, :, :]
    travel = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(travel, 0.0)
    return Instance(travel, crit, True, f"euclid-n{n}-s{seed}")


def generate_uniform(n: int, seed: int, time_low: float = 1.0, time_high: float = 100.0,
                     crit_low: float = 100.0, crit_high: float = 300.0) -> Instance:
    """Independent uniform travel times per edge; generally violates the triangle inequality."""
    if n < 1:
        raise InstanceError("n must be at least 1")
    if not (crit_low > 0 and crit_low <= crit_high):
        raise InstanceError(f"need 0 < crit_low <= crit_high, got {crit_low}, {crit_high}")
    if not (0 <= time_low <= time_high):
        raise InstanceError(f"need 0 <= time_low <= time_high, got {time_low}, {time_high}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.uniform(time_low, time_high, size=(n, n)), 1)
    crit = rng.uniform(crit_low, crit_high, size=n)
    return Instance(upper + upper.T, crit, False, f"uniform-n{n}-s{seed}")


def metric_closure(inst: Instance) -> Instance:
    """Replace every travel time by the shortest-path distance (Floyd-Warshall)."""
    d = np.array(inst.travel, dtype=np.float64)
    # Sums along different paths can round differently, so one sweep may leave
    # one-ulp slack; repeating until nothing changes makes the result a fixpoint
    # and therefore the transform idempotent.
    while True:
        prev = d
        for k in range(inst.n):
            d = np.minimum(d, d[:, k][:, None] + d[k, :][None, :])
        d = np.minimum(d, d.T)
        if np.array_equal(d, prev):
            break
    return Instance(d, inst.crit, True, inst.name)


def relabel_by_critical_time(inst: Instance) -> tuple[Instance, NodeRelabeling]:
    """Renumber nodes by ascending critical time (ties by old index)."""
    backward = tuple(sorted(range(inst.n), key=lambda i: (inst.crit_list[i], i)))
    forward = [0] * inst.n
    for new, old in enumerate(backward):
        forward[old] = new
    idx = np.array(backward, dtype=int)
    relabeled = Instance(inst.travel[np.ix_(idx, idx)], inst.crit[idx], inst.is_metric, inst.name)
    return relabeled, NodeRelabeling(tuple(forward), backward)


def validate_partition(inst: Instance, part) -> Verdict:
    """Check node coverage and the length constraint of every cycle.

    ``part`` is a CyclePartition or a sequence of node sequences in traversal
    order. Times are recomputed from the instance.
    """
    cycles = part.cycles if isinstance(part, CyclePartition) else part
    seen: dict[int, int] = {}
    for ci, c in enumerate(cycles):
        nodes = list(c.nodes if isinstance(c, Cycle) else c)
        if not nodes:
            return Verdict(False, f"cycle {ci} is empty")
        if len(set(nodes)) != len(nodes):
            return Verdict(False, f"cycle {ci} {nodes} visits a node twice")
        for v in nodes:
            if not (0 <= v < inst.n):
                return Verdict(False, f"cycle {ci} contains unknown node {v}")
            if v in seen:
                return Verdict(False, f"node {v} is covered by cycles {seen[v]} and {ci}")
            seen[v] = ci
        t = cycle_time(nodes, inst.travel_rows)
        q = min(inst.crit_list[v] for v in nodes)
        if t > q:
            return Verdict(False, f"cycle {ci} {nodes} violates the length constraint: t(C)={t!r} > q(C)={q!r}")
    for v in range(inst.n):
        if v not in seen:
            return Verdict(False, f"node {v} is not covered")
    return Verdict(True)
