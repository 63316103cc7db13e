import pytest
from hypothesis import given
from hypothesis import strategies as st

from lccp.cycles import BranchDecision, Cycle, canonical, cycle_edges, cycle_time, respects_decisions, split_decisions

from helpers import make_instance


@given(st.lists(st.integers(0, 30), min_size=1, max_size=8, unique=True), st.integers(0, 7), st.booleans())
def test_canonical_form_is_rotation_and_direction_invariant(nodes, shift, backwards):
    k = shift % len(nodes)
    variant = nodes[k:] + nodes[:k]
    if backwards:
        variant = variant[::-1]
    assert canonical(variant) == canonical(nodes)
    c = canonical(nodes)
    assert c[0] == min(nodes)
    if len(c) >= 3:
        assert c[1] < c[-1]


def test_cycle_edges_of_small_cycles():
    assert cycle_edges([4]) == set()
    assert cycle_edges([2, 1]) == {(1, 2)}
    assert cycle_edges([0, 2, 1]) == {(0, 2), (1, 2), (0, 1)}


def test_two_cycle_traverses_its_edge_twice():
    inst = make_instance([[0, 4], [4, 0]], [7, 9])
    assert cycle_time([0, 1], inst.travel_rows) == 8.0
    assert cycle_time([1], inst.travel_rows) == 0.0


def test_cycle_requires_canonical_nodes():
    with pytest.raises(ValueError):
        Cycle((2, 0, 1))
    with pytest.raises(ValueError):
        Cycle(())
    assert Cycle((0, 1, 2)) == Cycle((0, 1, 2), time=5.0)


def test_respects_decisions_rules():
    forced, forbidden = split_decisions([BranchDecision((2, 1), True)])
    assert forced == {(1, 2)} and not forbidden
    assert respects_decisions((3,), forced, forbidden)
    assert not respects_decisions((1, 3, 4), forced, forbidden)
    assert respects_decisions((1, 2, 3), forced, forbidden)
    forced, forbidden = split_decisions([BranchDecision((1, 2), False)])
    assert not respects_decisions((1, 2, 3), forced, forbidden)
    assert respects_decisions((1,), forced, forbidden)
