import itertools
import math

import numpy as np
import pytest

from lccp.lp import (
    EQUAL,
    GREATER_EQUAL,
    INFEASIBLE,
    OPTIMAL,
    LpProblem,
    solve_lp,
)


def brute_force_lp(matrix, senses):
    """Minimum of sum(x) over x >= 0 with the given rows, by enumerating every basic solution.

    Surplus columns are appended for >= rows. Every independent column subset
    of size at most the row count is solved exactly; returns inf if none is
    feasible.
    """
    m, k = matrix.shape
    extra = [i for i, s in enumerate(senses) if s == GREATER_EQUAL]
    full = np.hstack([matrix, -np.eye(m)[:, extra]]) if extra else matrix
    cost = np.concatenate([np.ones(k), np.zeros(len(extra))])
    b = np.ones(m)
    best = math.inf
    for size in range(1, m + 1):
        for cols in itertools.combinations(range(full.shape[1]), size):
            sub = full[:, cols]
            if np.linalg.matrix_rank(sub) < size:
                continue
            x, *_ = np.linalg.lstsq(sub, b, rcond=None)
            if np.abs(sub @ x - b).max() > 1e-9 or (x < -1e-9).any():
                continue
            best = min(best, float(cost[list(cols)] @ x))
    return best


def random_master(rng, m, k, covering):
    cols = []
    while len(cols) < k:
        size = int(rng.integers(1, m + 1))
        col = np.zeros(m)
        col[rng.choice(m, size=size, replace=False)] = 1.0
        cols.append(col)
    matrix = np.array(cols).T
    return LpProblem(matrix, [GREATER_EQUAL if covering else EQUAL] * m)


def certify(p, out):
    m = p.nrows
    if out.status == OPTIMAL:
        x, y = out.primal, out.duals
        assert (x >= 0).all()
        act = p.matrix @ x
        for i in range(m):
            if p.row_sense[i] == EQUAL:
                assert abs(act[i] - 1) <= 1e-7
            else:
                assert act[i] >= 1 - 1e-7
                assert y[i] >= -1e-9
        assert (1 - y @ p.matrix >= -1e-7).all()
        assert out.objective == pytest.approx(x.sum(), abs=1e-9)
        assert y.sum() == pytest.approx(out.objective, abs=1e-7)
    else:
        y = out.farkas_ray
        assert (y @ p.matrix <= 1e-9).all()
        assert y.sum() > 1e-9
        for i in range(m):
            if p.row_sense[i] == GREATER_EQUAL:
                assert y[i] >= 0


def test_single_singleton_column():
    out = solve_lp(LpProblem(np.array([[1.0]]), [EQUAL]))
    assert out.status == OPTIMAL
    assert out.primal.tolist() == [1.0] and out.objective == 1.0 and out.duals.tolist() == [1.0]


def test_uncoverable_row_gives_ray():
    p = LpProblem(np.array([[1.0], [0.0]]), [EQUAL, EQUAL])
    out = solve_lp(p)
    assert out.status == INFEASIBLE
    y = out.farkas_ray
    assert y @ p.matrix[:, 0] <= 1e-9 and y[1] > 0
    certify(p, out)


def test_no_columns():
    out = solve_lp(LpProblem(np.zeros((2, 0)), [GREATER_EQUAL] * 2))
    assert out.status == INFEASIBLE and (out.farkas_ray >= 0).all()


@pytest.mark.parametrize("seed", range(60))
def test_matches_basis_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    k = int(rng.integers(1, 11))
    covering = bool(seed % 2)
    p = random_master(rng, m, k, covering)
    out = solve_lp(p)
    expected = brute_force_lp(p.matrix, p.row_sense)
    certify(p, out)
    if math.isinf(expected):
        assert out.status == INFEASIBLE
    else:
        assert out.status == OPTIMAL
        assert out.objective == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_larger_masters_certified(seed):
    rng = np.random.default_rng(1000 + seed)
    m = 8
    p = random_master(rng, m, 40, covering=seed % 2 == 1)
    certify(p, solve_lp(p))


@pytest.mark.parametrize("seed", range(20))
def test_warm_start_after_adding_columns(seed):
    rng = np.random.default_rng(500 + seed)
    m = 7
    covering = seed % 2 == 1
    base = np.eye(m)
    extra = random_master(rng, m, 25, covering).matrix
    first = LpProblem(np.hstack([base, extra[:, :10]]), [GREATER_EQUAL if covering else EQUAL] * m)
    out1 = solve_lp(first)
    second = LpProblem(np.hstack([first.matrix, extra[:, 10:]]), first.row_sense)
    warm = solve_lp(second, warm_start=out1.basis)
    cold = solve_lp(second)
    certify(second, warm)
    assert warm.objective == pytest.approx(cold.objective, abs=1e-7)
    assert warm.objective <= out1.objective + 1e-9


def test_degenerate_master_terminates():
    # many identical and nested columns make most pivots degenerate
    m = 6
    cols = [np.eye(m)[:, i] for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            c = np.zeros(m)
            c[[i, j]] = 1
            cols += [c, c.copy()]
    p = LpProblem(np.array(cols).T, [EQUAL] * m)
    out = solve_lp(p)
    certify(p, out)
    assert out.objective == pytest.approx(3.0)


def test_deterministic():
    p = random_master(np.random.default_rng(3), 6, 20, False)
    a, b = solve_lp(p), solve_lp(p)
    assert a.primal.tobytes() == b.primal.tobytes() and a.duals.tobytes() == b.duals.tobytes()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(matrix=np.ones((2, 2)), row_sense=[EQUAL]),
        dict(matrix=np.ones((2, 2)), row_sense=[EQUAL, "less"]),
        dict(matrix=np.ones(3), row_sense=[EQUAL]),
        dict(matrix=np.ones((2, 2)), row_sense=[EQUAL, EQUAL], rhs=np.ones(3)),
    ],
)
def test_malformed_problems_rejected(kwargs):
    with pytest.raises(ValueError):
        LpProblem(**kwargs)
