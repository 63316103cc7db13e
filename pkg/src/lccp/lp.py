"""Dense revised simplex for the restricted master problem.

Solves ``min c x  s.t.  A x (= or >=) 1, x >= 0`` for 0/1 matrices. Phase 1
uses one artificial variable per row; when its optimum stays positive the
phase-1 duals are returned as a Farkas ray. Pricing uses Dantzig's rule and
switches to Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

EQUAL = "equal"
GREATER_EQUAL = "greater_equal"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"


class LpNumericalError(RuntimeError):
    """Pivot breakdown, singular basis or a certificate that does not verify."""


@dataclass(frozen=True)
class LpTolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-7
    zero_pivot: float = 1e-10
    farkas: float = 1e-9
    stall_pivots: int = 50
    refactor_every: int = 64
    max_iterations: int = 100_000


@dataclass
class LpProblem:
    matrix: np.ndarray  # nrows x ncols, entries 0/1
    row_sense: Sequence[str]
    obj: Optional[np.ndarray] = None
    rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValueError("constraint matrix must be two-dimensional")
        m, k = self.matrix.shape
        if len(self.row_sense) != m:
            raise ValueError(f"{len(self.row_sense)} row senses for {m} rows")
        for sense in self.row_sense:
            if sense not in (EQUAL, GREATER_EQUAL):
                raise ValueError(f"unknown row sense {sense!r}")
        self.obj = np.ones(k) if self.obj is None else np.asarray(self.obj, dtype=np.float64)
        self.rhs = np.ones(m) if self.rhs is None else np.asarray(self.rhs, dtype=np.float64)
        if self.obj.shape != (k,) or self.rhs.shape != (m,):
            raise ValueError("objective or right-hand side has the wrong length")
        if (self.rhs < 0).any():
            raise ValueError("right-hand side must be nonnegative")

    @property
    def nrows(self) -> int:
        return self.matrix.shape[0]

    @property
    def ncols(self) -> int:
        return self.matrix.shape[1]


@dataclass
class LpOutcome:
    status: str
    primal: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None
    farkas_ray: Optional[np.ndarray] = None
    basis: list = field(default_factory=list)
    iterations: int = 0


class _Simplex:
    """Standard-form working copy: structural, surplus and artificial columns."""

    def __init__(self, p: LpProblem, tol: LpTolerances):
        self.p = p
        self.tol = tol
        m, k = p.matrix.shape
        ge_rows = [i for i, s in enumerate(p.row_sense) if s == GREATER_EQUAL]
        self.m = m
        self.keys = [("c", j) for j in range(k)] + [("s", i) for i in ge_rows] + [("a", i) for i in range(m)]
        surplus = np.zeros((m, len(ge_rows)))
        for col, i in enumerate(ge_rows):
            surplus[i, col] = -1.0
        self.M = np.hstack([p.matrix, surplus, np.eye(m)])
        self.n_real = k + len(ge_rows)
        self.b = p.rhs
        self.iterations = 0
        self.basis: list[int] = []
        self.Binv = np.eye(m)

    def set_basis(self, basis: list[int]) -> bool:
        B = self.M[:, basis]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(Binv)) or np.abs(Binv @ B - np.eye(self.m)).max() > 1e-9:
            return False
        self.basis = list(basis)
        self.Binv = Binv
        return True

    def refactor(self):
        if not self.set_basis(self.basis):
            raise LpNumericalError("basis became singular")

    def xB(self) -> np.ndarray:
        return self.Binv @ self.b

    def run(self, cost: np.ndarray, eligible: np.ndarray, opt_tol: float) -> None:
        """Iterate to optimality for ``cost`` over columns flagged ``eligible``."""
        tol = self.tol
        degenerate = 0
        since_refactor = 0
        while True:
            if self.iterations >= tol.max_iterations:
                raise LpNumericalError("simplex iteration limit reached")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.M
            d[self.basis] = 0.0
            cand = np.flatnonzero(eligible & (d < -opt_tol))
            if cand.size == 0:
                return
            bland = degenerate >= tol.stall_pivots
            q = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            w = self.Binv @ self.M[:, q]
            x = self.xB()
            rows = np.flatnonzero(w > tol.zero_pivot)
            if rows.size == 0:
                raise LpNumericalError("unbounded direction in a bounded problem")
            ratios = np.maximum(x[rows], 0.0) / w[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12]
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(w[ties])])
            if abs(w[r]) < tol.zero_pivot:
                raise LpNumericalError("pivot element too small")
            degenerate = degenerate + 1 if best <= tol.feasibility else 0
            self.pivot(r, q, w)
            since_refactor += 1
            if since_refactor >= tol.refactor_every:
                self.refactor()
                since_refactor = 0

    def pivot(self, r: int, q: int, w: np.ndarray) -> None:
        piv = w[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(w, row)
        self.Binv[r] = row
        self.basis[r] = q
        self.iterations += 1

    def drive_out_artificials(self) -> None:
        """Pivot zero-level artificials out of the basis where a real column can replace them."""
        for r in range(self.m):
            if self.basis[r] < self.n_real:
                continue
            row = self.Binv[r] @ self.M[:, : self.n_real]
            row[[j for j in self.basis if j < self.n_real]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                self.pivot(r, j, self.Binv @ self.M[:, j])
        self.refactor()


def solve_lp(p: LpProblem, warm_start: Optional[list] = None, tol: LpTolerances = LpTolerances()) -> LpOutcome:
    """Solve the master LP; returns an optimal primal/dual pair or a Farkas ray.

    ``warm_start`` is a basis (list of variable keys) from an earlier outcome
    of a problem with the same rows. It is used when it is nonsingular and
    primal feasible, otherwise the solve starts cold.
    """
    m, k = p.nrows, p.ncols
    if m == 0:
        return LpOutcome(OPTIMAL, np.zeros(k), np.zeros(0), 0.0, basis=[])
    sx = _Simplex(p, tol)
    nvar = sx.M.shape[1]
    index = {key: j for j, key in enumerate(sx.keys)}
    real = np.zeros(nvar, dtype=bool)
    real[: sx.n_real] = True

    warm = False
    if warm_start is not None and len(warm_start) == m and all(key in index for key in warm_start):
        basis = [index[key] for key in warm_start]
        if len(set(basis)) == m and sx.set_basis(basis):
            x = sx.xB()
            art = np.array([j >= sx.n_real for j in basis])
            if (x >= -tol.feasibility).all() and not (x[art] > tol.feasibility).any():
                warm = True
                sx.drive_out_artificials()
    if not warm:
        sx.set_basis(list(range(sx.n_real, nvar)))
        phase1 = np.zeros(nvar)
        phase1[sx.n_real:] = 1.0
        # artificials that leave never re-enter
        sx.run(phase1, real.copy(), tol.farkas)
        infeas = float(phase1[sx.basis] @ sx.xB())
        if infeas > tol.feasibility:
            y = phase1[sx.basis] @ sx.Binv
            return LpOutcome(INFEASIBLE, farkas_ray=_check_ray(p, y, tol), iterations=sx.iterations,
                             basis=[sx.keys[j] for j in sx.basis])
        sx.drive_out_artificials()

    cost = np.zeros(nvar)
    cost[:k] = p.obj
    sx.run(cost, real, tol.optimality)
    sx.refactor()
    xB = sx.xB()
    x = np.zeros(nvar)
    x[sx.basis] = xB
    if (xB < -tol.feasibility).any():
        raise LpNumericalError("basic solution lost primal feasibility")
    if (x[sx.n_real:] > tol.feasibility).any():
        raise LpNumericalError("artificial variable positive in phase 2")
    primal = np.maximum(x[:k], 0.0)
    y = cost[sx.basis] @ sx.Binv
    ge = np.array([s == GREATER_EQUAL for s in p.row_sense])
    # sign-constrained duals of >= rows: clip roundoff, which keeps dual feasibility
    y[ge & (y < 0) & (y > -tol.optimality)] = 0.0
    objective = float(p.obj @ primal)
    _check_optimal(p, primal, y, objective, tol)
    return LpOutcome(OPTIMAL, primal, y, objective, basis=[sx.keys[j] for j in sx.basis],
                     iterations=sx.iterations)


def _check_ray(p: LpProblem, y: np.ndarray, tol: LpTolerances) -> np.ndarray:
    y = y.copy()
    ge = np.array([s == GREATER_EQUAL for s in p.row_sense])
    y[np.abs(y) < 1e-12] = 0.0
    if (y[ge] < -tol.farkas).any():
        raise LpNumericalError("Farkas ray has a negative entry on a >= row")
    y[ge] = np.maximum(y[ge], 0.0)
    if p.ncols and (y @ p.matrix > tol.farkas).any():
        raise LpNumericalError("Farkas ray does not separate every column")
    if not y @ p.rhs > tol.farkas:
        raise LpNumericalError("Farkas ray has no positive right-hand side value")
    return y


def _check_optimal(p: LpProblem, x: np.ndarray, y: np.ndarray, objective: float, tol: LpTolerances) -> None:
    act = p.matrix @ x - p.rhs
    ge = np.array([s == GREATER_EQUAL for s in p.row_sense])
    if (np.abs(act[~ge]) > tol.feasibility).any() or (act[ge] < -tol.feasibility).any():
        raise LpNumericalError("primal residual above tolerance")
    red = p.obj - y @ p.matrix
    if (red < -tol.optimality).any():
        raise LpNumericalError("dual infeasible column at reported optimum")
    if abs(float(y @ p.rhs) - objective) > tol.optimality * max(1.0, abs(objective)):
        raise LpNumericalError("primal and dual objective differ")
