import numpy as np
import pytest

from lccp.bnb import (
    OPTIMAL,
    TIMEOUT,
    TreeNode,
    branch,
    check_integrality,
    greedy_primal,
    repair_cover,
    select_branching_edge,
    select_next_node,
    should_early_branch,
    solve,
)
from lccp.config import COVER, VARIANT_NAMES, SolverConfig, variant
from lccp.cycles import BranchDecision, Cycle
from lccp.instance import generate_euclidean, validate_partition
from lccp.oracle import enumerate_cycles, optimal_partition

from helpers import make_instance, mixed_instance


def partitions_from_catalog(n, catalog):
    """All partitions of range(n) into catalog cycles, as frozensets of node tuples."""
    by_low = {}
    for c in catalog:
        by_low.setdefault(c.nodes[0], []).append(c)
    out = set()

    def rec(covered, chosen):
        if covered == (1 << n) - 1:
            out.add(frozenset(chosen))
            return
        low = next(i for i in range(n) if not covered >> i & 1)
        for c in by_low.get(low, []):
            if not c.mask & covered:
                rec(covered | c.mask, chosen + [c.nodes])

    rec(0, [])
    return out


# ---------------------------------------------------------------- solve


def test_single_node():
    res = solve(make_instance([[0]], [1]))
    assert res.status == OPTIMAL and res.partition.objective == 1
    assert [c.nodes for c in res.partition.cycles] == [(0,)]


def test_all_singletons_when_edges_are_too_long():
    far = np.full((3, 3), 1e6)
    np.fill_diagonal(far, 0)
    res = solve(make_instance(far, [1, 2, 3]))
    assert res.partition.objective == 3


@pytest.mark.parametrize("seed", range(40))
def test_matches_oracle(seed):
    inst = mixed_instance(seed, 4 + seed % 6)
    res = solve(inst)
    assert res.status == OPTIMAL
    assert res.partition.objective == optimal_partition(inst)
    assert validate_partition(inst, res.partition)
    assert res.stats.lower_bound == res.stats.upper_bound == res.partition.objective


@pytest.mark.parametrize("name", VARIANT_NAMES)
def test_variants_agree(name):
    for seed in range(8):
        inst = mixed_instance(seed + 50, 8)
        assert solve(inst, variant(name, SolverConfig())).partition.objective == optimal_partition(inst)


@pytest.mark.parametrize("plunge_depth", [0, 1, 3, 10])
def test_node_order_does_not_change_optimum(plunge_depth):
    for seed in (8, 19, 23):
        inst = generate_euclidean(18, seed, crit_low=80, crit_high=200)
        ref = solve(inst).partition.objective
        assert solve(inst, SolverConfig(plunge_depth=plunge_depth)).partition.objective == ref


@pytest.mark.parametrize("seed, n", [(54, 10), (72, 8), (159, 11), (174, 10)])
def test_instances_that_need_branching(seed, n):
    inst = mixed_instance(seed, n)
    expected = optimal_partition(inst)
    for early in (False, True):
        res = solve(inst, SolverConfig(early_branching=early))
        assert res.partition.objective == expected
    assert solve(inst, SolverConfig(early_branching=False)).stats.nodes_processed > 2


def test_covering_mode_needs_metric():
    with pytest.raises(ValueError, match="covering mode requires metric instance"):
        solve(mixed_instance(0, 4), SolverConfig(mode=COVER))


@pytest.mark.parametrize("seed", range(10))
def test_covering_mode_matches_oracle(seed):
    inst = generate_euclidean(4 + seed % 5, seed, crit_low=60, crit_high=250)
    res = solve(inst, SolverConfig(mode=COVER))
    assert res.partition.objective == optimal_partition(inst)
    assert validate_partition(inst, res.partition)


def test_timeout_reports_incumbent_and_bound():
    inst = generate_euclidean(30, 4, crit_low=100, crit_high=300)
    res = solve(inst, SolverConfig(time_limit_s=1e-3))
    assert res.status == TIMEOUT
    assert res.partition.objective <= greedy_primal(inst).objective
    assert validate_partition(inst, res.partition)
    assert res.stats.lower_bound <= res.stats.upper_bound


def test_deterministic_across_workers():
    inst = generate_euclidean(16, 2, crit_low=80, crit_high=200)
    a = solve(inst)
    b = solve(inst, SolverConfig(workers=2))
    assert [c.nodes for c in a.partition.cycles] == [c.nodes for c in b.partition.cycles]
    da, db = a.stats.to_dict(), b.stats.to_dict()
    da.pop("wall_time"), db.pop("wall_time")
    assert da == db


# ---------------------------------------------------------------- branching


def test_branching_edge_tie_break():
    assert select_branching_edge([0.5], [Cycle((0, 1, 2))]) == (0, 1)


def test_branching_edge_most_used():
    cols = [Cycle((0, 1, 2)), Cycle((0, 1, 3)), Cycle((2,)), Cycle((3,))]
    assert select_branching_edge([0.5, 0.5, 0.5, 0.5], cols) == (0, 1)
    assert select_branching_edge([0.5, 0.5, 0.5, 0.5], cols, {(0, 1)}) == (0, 2)


def test_two_cycle_counts_twice():
    cols = [Cycle((0, 1)), Cycle((2, 3, 4)), Cycle((0,)), Cycle((1,))]
    assert select_branching_edge([0.4, 0.6, 0.6, 0.6], cols) == (0, 1)


def test_branching_on_integral_solution_is_an_error():
    with pytest.raises(ValueError):
        select_branching_edge([1.0, 0.0], [Cycle((0,)), Cycle((0, 1))])


def test_branch_children():
    root = TreeNode(0, None, (), parent_lb=3)
    force, forbid = branch(root, (1, 0), 1)
    assert force.decisions == (BranchDecision((0, 1), True),)
    assert forbid.decisions == (BranchDecision((0, 1), False),)
    assert force.parent_lb == forbid.parent_lb == 3 and force.parent == 0 and force.depth == 1
    with pytest.raises(ValueError):
        branch(force, (0, 1), 3)


@pytest.mark.parametrize("seed", range(6))
def test_children_split_parent_partitions(seed):
    inst = mixed_instance(seed, 5)
    rng = np.random.default_rng(seed)
    edge = tuple(sorted(rng.choice(5, size=2, replace=False).tolist()))
    parent = TreeNode(0, None)
    force, forbid = branch(parent, edge, 1)
    every = partitions_from_catalog(5, enumerate_cycles(inst))
    kids = [partitions_from_catalog(5, enumerate_cycles(inst, c.decisions)) for c in (force, forbid)]
    assert kids[0] | kids[1] == every and not kids[0] & kids[1]
    values = [optimal_partition(inst, c.decisions) for c in (force, forbid)]
    assert min(values) == optimal_partition(inst)


def test_early_branch_condition():
    node = TreeNode(1, 0, (), parent_lb=4)
    assert should_early_branch(node, 3.2)
    assert not should_early_branch(node, 4.2)
    assert should_early_branch(node, 4.0 + 1e-9)


def test_node_selection():
    only = TreeNode(5, 0, estimate=9)
    assert select_next_node([only]) == (only, False)
    a, b = TreeNode(1, 0, estimate=3.0), TreeNode(2, 0, estimate=2.0)
    force, forbid = TreeNode(3, 1, estimate=4.0), TreeNode(4, 1, estimate=4.0)
    open_nodes = [a, b, force, forbid]
    assert select_next_node(open_nodes, [force, forbid], plunges=0) == (force, True)
    assert select_next_node(open_nodes, [force, forbid], plunges=10, max_plunge=10) == (b, False)
    assert select_next_node(open_nodes, []) == (b, False)
    tie = TreeNode(0, None, estimate=2.0)
    assert select_next_node([b, tie])[0] is tie
    with pytest.raises(ValueError):
        select_next_node([])


# ---------------------------------------------------------------- heuristic and integrality


def test_greedy_all_singletons():
    far = np.full((4, 4), 50.0)
    np.fill_diagonal(far, 0)
    part = greedy_primal(make_instance(far, [10, 20, 30, 40]))
    assert sorted(c.nodes for c in part.cycles) == [(0,), (1,), (2,), (3,)]


def test_greedy_builds_triangle():
    # an equilateral triangle of side 1 and one far node
    pts = np.array([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2], [100, 100]])
    d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(d, 0)
    inst = make_instance(np.minimum(d, d.T), [5, 5, 5, 5])
    part = greedy_primal(inst)
    assert sorted(c.nodes for c in part.cycles) == [(0, 1, 2), (3,)]


@pytest.mark.parametrize("seed", range(20))
def test_greedy_is_valid(seed):
    inst = mixed_instance(seed, 12)
    assert validate_partition(inst, greedy_primal(inst))


def test_integrality_check():
    inst = make_instance(np.ones((3, 3)) - np.eye(3), [9, 9, 9])
    singles = [Cycle((0,)), Cycle((1,)), Cycle((2,))]
    part = check_integrality([1.0, 1.0, 1.0], singles, inst)
    assert part.objective == 3
    assert check_integrality([0.5, 0.5], [Cycle((0, 1)), Cycle((0, 1, 2))], inst) is None


def test_covering_repair_on_metric_instance():
    pts = np.array([[0, 0], [2, 0], [1, 1], [3, 1], [4, 0], [3, -1]], dtype=float)
    d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    inst = make_instance(np.minimum(d, d.T), [20] * 6, metric=True)
    cols = [Cycle((0, 1, 2)), Cycle((1, 3, 4, 5))]
    part = check_integrality([1.0, 1.0], cols, inst, covering=True)
    assert part.objective == 2
    assert validate_partition(inst, part)
    assert sum(len(c) for c in part.cycles) == 6
    # the first holder keeps a repeated node
    assert repair_cover([(0, 1), (0, 1, 2)], inst) == [(0, 1), (2,)]
