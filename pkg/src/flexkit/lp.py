"""Small dense linear-programming solver.

Two-phase tableau simplex with Dantzig pricing and a Bland's-rule fallback
once degenerate pivots accumulate.  Variables are free by default; finite
lower bounds are shifted out and free variables are split internally.
Intended for the tiny, dense subproblems produced by the flexibility
algorithms, not as a general-purpose LP code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationLimitError

__all__ = ["LpProblem", "LpSolution", "solve_lp", "OPTIMAL", "INFEASIBLE", "UNBOUNDED"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_RC_TOL = 1e-9          # reduced-cost optimality threshold
_PIVOT_TOL = 1e-10      # smallest admissible pivot element
_PHASE1_TOL = 1e-8      # phase-1 objective above this value => infeasible
_DEGEN_TOL = 1e-12      # ratio below this counts as a degenerate pivot
_MAX_PIVOTS = 100_000


@dataclass
class LpProblem:
    """min/max c @ x subject to A_eq x = b_eq, A_ub x <= b_ub, lb <= x <= ub.

    Bounds default to free variables (-inf, +inf).  Arrays may be None when
    a constraint block is absent.
    """

    sense: str
    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.a_eq, self.b_eq = _check_block(self.a_eq, self.b_eq, n, "eq")
        self.a_ub, self.b_ub = _check_block(self.a_ub, self.b_ub, n, "ub")
        self.lb = _check_bound(self.lb, n, -np.inf)
        self.ub = _check_bound(self.ub, n, np.inf)
        for arr in (self.c, self.a_eq, self.a_ub, self.b_eq, self.b_ub):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError("coefficients must be finite")


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    dual_eq: np.ndarray | None = None
    dual_ub: np.ndarray | None = None
    pivots: int = 0


def _check_block(a, b, n, tag):
    if a is None or (hasattr(a, "__len__") and len(a) == 0):
        return np.zeros((0, n)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (b.size, n):
        raise ValueError(f"{tag} block shape {a.shape} inconsistent with n={n}, m={b.size}")
    return a, b


def _check_bound(v, n, fill):
    if v is None:
        return np.full(n, fill)
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"bound vector has shape {v.shape}, expected ({n},)")
    return v.copy()


class _Simplex:
    """Tableau simplex on the standard form min c@x, A x = b, x >= 0."""

    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray):
        m, n = a.shape
        self.m, self.n = m, n
        # flip rows so the artificial basis is feasible
        flip = b < 0.0
        a = np.where(flip[:, None], -a, a)
        b = np.where(flip, -b, b)
        self.flip = flip
        self.c = c
        # columns: structural | artificial | rhs
        self.tab = np.zeros((m, n + m + 1))
        self.tab[:, :n] = a
        self.tab[:, n : n + m] = np.eye(m)
        self.tab[:, -1] = b
        self.a0 = self.tab[:, : n + m].copy()  # flipped system, for dual extraction
        self.basis = np.arange(n, n + m)
        self.pivots = 0
        self.degenerate = 0
        self.bland_after = 5 * (m + n)

    def _pivot(self, row: int, col: int):
        tab = self.tab
        tab[row] /= tab[row, col]
        factor = tab[:, col].copy()
        factor[row] = 0.0
        tab -= np.outer(factor, tab[row])
        self.basis[row] = col
        self.pivots += 1

    def _iterate(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        """Run pivots for the given cost vector; returns 'optimal'/'unbounded'."""
        tab = self.tab
        while True:
            if self.pivots >= _MAX_PIVOTS:
                raise IterationLimitError("pivot budget exhausted")
            # reduced costs on allowed, nonbasic columns
            y = cost[self.basis]
            rc = cost[: self.n + self.m] - y @ tab[:, : self.n + self.m]
            rc[self.basis] = 0.0
            rc[~allowed] = np.inf
            use_bland = self.degenerate > self.bland_after
            if use_bland:
                neg = np.flatnonzero(rc < -_DEGEN_TOL)
                if neg.size == 0:
                    return OPTIMAL
                col = int(neg[0])
            else:
                col = int(np.argmin(rc))
                if rc[col] >= -_RC_TOL:
                    return OPTIMAL
            colvec = tab[:, col]
            rows = np.flatnonzero(colvec > _PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = tab[rows, -1] / colvec[rows]
            best = float(np.min(ratios))
            ties = rows[ratios <= best + _DEGEN_TOL]
            if use_bland:
                row = int(ties[np.argmin(self.basis[ties])])
            else:
                row = int(ties[0])
            if best < _DEGEN_TOL:
                self.degenerate += 1
            self._pivot(row, col)

    def solve(self) -> str:
        m, n = self.m, self.n
        # phase 1: minimize the artificial sum
        cost1 = np.zeros(n + m)
        cost1[n:] = 1.0
        allowed = np.ones(n + m, dtype=bool)
        status = self._iterate(cost1, allowed)
        if status != OPTIMAL:  # pragma: no cover - phase 1 is always bounded
            return status
        phase1_obj = float(cost1[self.basis] @ self.tab[:, -1])
        if phase1_obj > _PHASE1_TOL:
            return INFEASIBLE
        # phase 2: original cost, artificial columns barred from entering
        cost2 = np.concatenate([self.c, np.zeros(m)])
        allowed[n:] = False
        return self._iterate(cost2, allowed)

    def primal(self) -> np.ndarray:
        x = np.zeros(self.n + self.m)
        x[self.basis] = self.tab[:, -1]
        return x[: self.n]

    def duals(self) -> np.ndarray:
        """Row prices y solving B.T y = c_B, mapped back through row flips."""
        cost = np.concatenate([self.c, np.zeros(self.m)])
        basis_cols = self.a0[:, self.basis]
        y = np.linalg.solve(basis_cols.T, cost[self.basis])
        return np.where(self.flip, -y, y)


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve an LpProblem; deterministic for identical input.

    Returns an LpSolution whose duals follow the sensitivity convention
    d(objective)/d(rhs) for the problem's own sense, so inequality duals are
    <= 0 for minimization and >= 0 for maximization.
    """
    n = problem.c.size
    sign = 1.0 if problem.sense == "min" else -1.0
    c = sign * problem.c

    # shift finite lower bounds to zero, split remaining free variables
    lb = problem.lb
    ub = problem.ub
    shift = np.where(np.isfinite(lb), lb, 0.0)
    a_eq, b_eq = problem.a_eq, problem.b_eq - problem.a_eq @ shift
    a_ub, b_ub = problem.a_ub, problem.b_ub - problem.a_ub @ shift

    # finite upper bounds become extra <= rows (duals on them stay internal)
    fin_ub = np.flatnonzero(np.isfinite(ub))
    if fin_ub.size:
        rows = np.zeros((fin_ub.size, n))
        rows[np.arange(fin_ub.size), fin_ub] = 1.0
        a_ub = np.vstack([a_ub, rows])
        b_ub = np.concatenate([b_ub, ub[fin_ub] - shift[fin_ub]])
    m_ub_user = problem.b_ub.size

    # column map: every variable gets a +column; free variables also a -column
    neg_idx = np.flatnonzero(~np.isfinite(lb))
    n_struct = n + neg_idx.size

    def expand(mat):
        out = np.zeros((mat.shape[0], n_struct))
        out[:, :n] = mat
        out[:, n:] = -mat[:, neg_idx]
        return out

    # drop all-zero rows (tiny presolve); infeasible zero rows end it early
    ae, be = expand(a_eq), b_eq
    keep_eq = np.ones(be.size, dtype=bool)
    for i in range(be.size):
        if not np.any(np.abs(ae[i]) > 1e-14):
            keep_eq[i] = False
            if abs(be[i]) > _PHASE1_TOL:
                return LpSolution(status=INFEASIBLE)
    au, bu = expand(a_ub), b_ub
    keep_ub = np.ones(bu.size, dtype=bool)
    for i in range(bu.size):
        if not np.any(np.abs(au[i]) > 1e-14):
            keep_ub[i] = False
            if bu[i] < -_PHASE1_TOL:
                return LpSolution(status=INFEASIBLE)
    ae, be = ae[keep_eq], be[keep_eq]
    au, bu = au[keep_ub], bu[keep_ub]

    # slacks turn <= rows into equalities
    m_eq, m_ub = be.size, bu.size
    a_std = np.zeros((m_eq + m_ub, n_struct + m_ub))
    a_std[:m_eq, :n_struct] = ae
    a_std[m_eq:, :n_struct] = au
    a_std[m_eq:, n_struct:] = np.eye(m_ub)
    b_std = np.concatenate([be, bu])
    c_std = np.zeros(n_struct + m_ub)
    c_std[:n] = c
    c_std[n:n_struct] = -c[neg_idx]

    sx = _Simplex(a_std, b_std, c_std)
    status = sx.solve()
    if status != OPTIMAL:
        return LpSolution(status=status, pivots=sx.pivots)

    xs = sx.primal()
    x = xs[:n].copy()
    x[neg_idx] -= xs[n:n_struct]
    x += shift
    objective = float(problem.c @ x)

    # map duals of kept rows back to their original positions
    y = sign * sx.duals()
    dual_eq = np.zeros(problem.b_eq.size)
    for pos, i in enumerate(np.flatnonzero(keep_eq)):
        dual_eq[i] = y[pos]
    dual_ub_all = np.zeros(b_ub.size)
    for pos, i in enumerate(np.flatnonzero(keep_ub)):
        dual_ub_all[i] = y[be.size + pos]
    dual_ub = dual_ub_all[:m_ub_user]

    return LpSolution(
        status=OPTIMAL,
        x=x,
        objective=objective,
        dual_eq=dual_eq,
        dual_ub=dual_ub,
        pivots=sx.pivots,
    )
