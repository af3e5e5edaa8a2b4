"""Dense two-phase tableau simplex for small linear programs.

Solves

    minimise    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

Pricing is Dantzig's rule (most negative reduced cost); after a run of
degenerate pivots the solver switches to Bland's rule, which cannot cycle.
A basis from a previous solve of a problem with the same constraints can be
passed back in to skip phase 1.
"""

import logging
from dataclasses import dataclass

import numpy as np

from errors import LPInfeasibleError, LPUnboundedError, NumericalError

log = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
DEGENERATE_LIMIT = 50


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    objective: float
    basis: tuple
    iterations: int
    warm_started: bool = False


class Tableau:
    """Rows hold B^-1 [A | b]; ``basis[r]`` is the column basic in row r."""

    def __init__(self, matrix, rhs, basis, tol=PIVOT_TOLERANCE):
        self.body = np.hstack([matrix, rhs[:, None]])
        self.basis = list(basis)
        self.tol = tol
        self.iterations = 0

    @property
    def num_columns(self):
        return self.body.shape[1] - 1

    @property
    def rhs(self):
        return self.body[:, -1]

    def pivot(self, row, col):
        body = self.body
        body[row] /= body[row, col]
        factors = body[:, col].copy()
        factors[row] = 0.0
        body -= np.outer(factors, body[row])
        self.basis[row] = col
        self.iterations += 1

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.body[:, :-1]

    def ratio_test(self, col, bland):
        column = self.body[:, col]
        rows = np.nonzero(column > self.tol)[0]
        if rows.size == 0:
            return None
        ratios = np.maximum(self.rhs[rows], 0.0) / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
        if bland:
            return int(min(ties, key=lambda r: self.basis[r]))
        # among ties prefer the largest pivot element for stability
        return int(ties[np.argmax(column[ties])])

    def optimise(self, cost, allowed, max_iterations):
        """Run primal simplex on ``cost`` using only columns flagged in ``allowed``."""
        bland = False
        degenerate = 0
        start = self.iterations
        while True:
            if self.iterations - start >= max_iterations:
                raise NumericalError(f"simplex did not terminate within {max_iterations} pivots")
            reduced = self.reduced_costs(cost)
            reduced[~allowed] = 0.0
            reduced[self.basis] = 0.0
            candidates = np.nonzero(reduced < -self.tol)[0]
            if candidates.size == 0:
                return
            col = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])
            row = self.ratio_test(col, bland)
            if row is None:
                raise LPUnboundedError(f"objective is unbounded below along column {col}")
            step = self.rhs[row] / self.body[row, col]
            if step <= self.tol:
                degenerate += 1
                if not bland and degenerate > DEGENERATE_LIMIT:
                    log.debug("simplex: %d degenerate pivots, switching to Bland's rule", degenerate)
                    bland = True
            else:
                degenerate = 0
            self.pivot(row, col)

    def drop_row(self, row):
        self.body = np.delete(self.body, row, axis=0)
        del self.basis[row]

    def drop_columns(self, first):
        """Delete columns ``first..`` (the artificials) keeping the RHS."""
        self.body = np.hstack([self.body[:, :first], self.body[:, -1:]])

    def solution(self, size):
        x = np.zeros(self.num_columns)
        x[self.basis] = self.rhs
        return np.maximum(x[:size], 0.0)


def _standard_form(c, A_ub, b_ub, A_eq, b_eq):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError(f"constraint shapes {A_ub.shape}/{A_eq.shape} do not match "
                         f"{n} variables and {b_ub.size}/{b_eq.size} right-hand sides")
    for name, arr in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} has non-finite entries")
    slacks = b_ub.size
    matrix = np.vstack([
        np.hstack([A_ub, np.eye(slacks)]),
        np.hstack([A_eq, np.zeros((b_eq.size, slacks))]),
    ])
    rhs = np.concatenate([b_ub, b_eq])
    cost = np.concatenate([c, np.zeros(slacks)])
    return cost, matrix, rhs, n, slacks


def _warm_tableau(matrix, rhs, basis, tol):
    basis = list(basis)
    if len(basis) != matrix.shape[0] or len(set(basis)) != len(basis):
        return None
    if any(not 0 <= j < matrix.shape[1] for j in basis):
        return None
    B = matrix[:, basis]
    try:
        body = np.linalg.solve(B, np.hstack([matrix, rhs[:, None]]))
    except np.linalg.LinAlgError:
        return None
    if np.any(body[:, -1] < -1e-9 * max(1.0, float(np.abs(rhs).max(initial=0.0)))):
        return None
    tableau = Tableau(body[:, :-1], body[:, -1], basis, tol)
    return tableau


def lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, basis=None, tol=PIVOT_TOLERANCE,
             max_iterations=None):
    """Solve a small dense LP; returns an optimal basic solution.

    Raises LPInfeasibleError if no x satisfies the constraints and
    LPUnboundedError if the objective has no lower bound.
    """
    cost, matrix, rhs, n, slacks = _standard_form(c, A_ub, b_ub, A_eq, b_eq)
    rows, cols = matrix.shape
    max_iterations = max_iterations or 50 * (rows + cols + 10)

    if basis is not None:
        tableau = _warm_tableau(matrix, rhs, basis, tol)
        if tableau is not None:
            tableau.optimise(cost, np.ones(cols, dtype=bool), max_iterations)
            x = tableau.solution(n)
            log.debug("simplex: warm start, %d pivots", tableau.iterations)
            return LPResult(x, float(cost[:n] @ x), tuple(tableau.basis), tableau.iterations, True)
        log.debug("simplex: warm-start basis rejected, solving from scratch")

    flip = rhs < 0
    matrix = matrix.copy()
    rhs = rhs.copy()
    matrix[flip] *= -1.0
    rhs[flip] *= -1.0

    # slack columns are a ready-made basis for unflipped <= rows, the rest get artificials
    needs_artificial = np.ones(rows, dtype=bool)
    needs_artificial[:slacks] = flip[:slacks]
    artificial_rows = np.nonzero(needs_artificial)[0]
    artificials = np.zeros((rows, artificial_rows.size))
    artificials[artificial_rows, np.arange(artificial_rows.size)] = 1.0
    start_basis = [n + r if not needs_artificial[r] else 0 for r in range(rows)]
    for k, r in enumerate(artificial_rows):
        start_basis[r] = cols + k

    tableau = Tableau(np.hstack([matrix, artificials]), rhs, start_basis, tol)
    total = cols + artificial_rows.size

    if artificial_rows.size:
        phase1 = np.zeros(total)
        phase1[cols:] = 1.0
        tableau.optimise(phase1, np.ones(total, dtype=bool), max_iterations)
        infeasibility = float(phase1[tableau.basis] @ tableau.rhs)
        if infeasibility > 1e-8 * max(1.0, float(rhs.max(initial=0.0))):
            raise LPInfeasibleError(f"constraints are infeasible (phase 1 residual {infeasibility:.3g})",
                                    detail=infeasibility)
        # drive remaining artificials out of the basis; rows where that fails are redundant
        row = 0
        while row < len(tableau.basis):
            if tableau.basis[row] >= cols:
                candidates = np.nonzero(np.abs(tableau.body[row, :cols]) > tol)[0]
                if candidates.size:
                    tableau.pivot(row, int(candidates[0]))
                else:
                    tableau.drop_row(row)
                    continue
            row += 1
        tableau.drop_columns(cols)

    tableau.optimise(cost, np.ones(cols, dtype=bool), max_iterations)
    x = tableau.solution(n)
    log.debug("simplex: %d rows, %d columns, %d pivots", rows, cols, tableau.iterations)
    return LPResult(x, float(cost[:n] @ x), tuple(tableau.basis), tableau.iterations, False)
