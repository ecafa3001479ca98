"""Convex quadratic programming by a primal active-set method.

Solves  min  x @ W @ x + q @ x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub
with W symmetric positive semidefinite.  W is allowed to be singular
(recourse variables carry zero quadratic weight); zero-curvature directions
are handled by eigendecomposition of the reduced Hessian rather than by
regularization, so they never bias the optimum.  A feasible starting point
comes from a phase LP.  Deterministic: blocking-constraint ties break to the
lowest constraint index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IterationLimitError
from .lp import INFEASIBLE, OPTIMAL, LpProblem, solve_lp

__all__ = ["QpProblem", "QpSolution", "solve_qp", "UNBOUNDED_SUBSPACE"]

UNBOUNDED_SUBSPACE = "unbounded_subspace"

_FEAS_TOL = 1e-9        # absolute feasibility tolerance on constraint residuals
_MULT_TOL = 1e-9        # multiplier nonnegativity threshold
_CURV_RTOL = 1e-12      # reduced-Hessian eigenvalues below this (relative) are flat
_STEP_TOL = 1e-11
_MAX_ITER = 10_000
_SYM_TOL = 1e-10


@dataclass
class QpProblem:
    """PSD quadratic x@W@x + q@x over linear equalities and inequalities."""

    w: np.ndarray
    q: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        self.q = np.asarray(self.q, dtype=float)
        n = self.q.size
        if self.w.shape != (n, n):
            raise ValueError(f"W has shape {self.w.shape}, expected ({n}, {n})")
        scale = max(float(np.max(np.abs(self.w))), 1.0)
        if float(np.max(np.abs(self.w - self.w.T))) > _SYM_TOL * scale:
            raise ValueError("W must be symmetric")
        self.w = 0.5 * (self.w + self.w.T)
        self.a_eq, self.b_eq = _block(self.a_eq, self.b_eq, n)
        self.a_ub, self.b_ub = _block(self.a_ub, self.b_ub, n)


def _block(a, b, n):
    if a is None or (hasattr(a, "__len__") and len(a) == 0):
        return np.zeros((0, n)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != (b.size, n):
        raise ValueError(f"constraint block shape {a.shape} inconsistent with rhs {b.size}")
    return a, b


@dataclass
class QpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    active: tuple[int, ...] = ()
    mult_eq: np.ndarray | None = None
    mult_ub: np.ndarray | None = None
    iterations: int = 0


def _null_space(a: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the null space of a (n columns); identity if empty."""
    if a.shape[0] == 0:
        return np.eye(n)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    if s.size:
        rank = int(np.sum(s > max(a.shape) * np.finfo(float).eps * s[0]))
    else:  # pragma: no cover
        rank = 0
    return vt[rank:].T


def solve_qp(problem: QpProblem) -> QpSolution:
    """Minimize the PSD quadratic; see module docstring for conventions.

    Multipliers satisfy 2 W x + q + A_eq.T y + A_ub.T mu = 0 with mu >= 0 and
    complementary slackness, so KKT residuals can be audited directly.
    """
    w, q = problem.w, problem.q
    a_eq, b_eq = problem.a_eq, problem.b_eq
    a_ub, b_ub = problem.a_ub, problem.b_ub
    n = q.size
    m_ub = b_ub.size

    # phase: any feasible vertex
    phase = solve_lp(LpProblem("min", np.zeros(n), a_eq=a_eq, b_eq=b_eq, a_ub=a_ub, b_ub=b_ub))
    if phase.status == INFEASIBLE:
        return QpSolution(status=INFEASIBLE)
    if phase.status != OPTIMAL:  # pragma: no cover - zero objective cannot be unbounded
        raise RuntimeError(f"phase LP returned {phase.status}")
    x = phase.x.copy()

    working: list[int] = []
    iterations = 0
    while True:
        if iterations >= _MAX_ITER:
            raise IterationLimitError("active-set iteration budget exhausted")
        iterations += 1

        a_work = np.vstack([a_eq, a_ub[working]]) if (b_eq.size or working) else np.zeros((0, n))
        z = _null_space(a_work, n)
        grad = 2.0 * (w @ x) + q

        p = np.zeros(n)
        ray = False
        if z.shape[1]:
            h_red = z.T @ w @ z
            g_red = z.T @ grad
            evals, evecs = np.linalg.eigh(h_red)
            emax = float(evals[-1]) if evals.size else 0.0
            flat = evals <= _CURV_RTOL * max(emax, 1.0)
            g_eig = evecs.T @ g_red
            gscale = 1.0 + float(np.linalg.norm(grad))
            flat_desc = flat & (np.abs(g_eig) > 1e-9 * gscale)
            if np.any(flat_desc):
                # zero curvature with nonzero slope: follow the steepest flat ray
                i = int(np.argmax(np.abs(g_eig) * flat_desc))
                p = z @ evecs[:, i] * (-np.sign(g_eig[i]))
                ray = True
            else:
                u = np.where(flat, 0.0, -g_eig / (2.0 * np.where(flat, 1.0, evals)))
                p = z @ (evecs @ u)

        if not ray and float(np.linalg.norm(p)) <= _STEP_TOL * (1.0 + float(np.linalg.norm(x))):
            # minimizer on the working set: check multiplier signs
            if a_work.shape[0]:
                nu, *_ = np.linalg.lstsq(a_work.T, -grad, rcond=None)
            else:
                nu = np.zeros(0)
            mu_work = nu[b_eq.size :]
            if mu_work.size == 0 or float(np.min(mu_work)) >= -_MULT_TOL:
                mult_eq = nu[: b_eq.size]
                mult_ub = np.zeros(m_ub)
                for k, idx in enumerate(working):
                    mult_ub[idx] = max(mu_work[k], 0.0)
                resid = a_ub @ x - b_ub if m_ub else np.zeros(0)
                active = tuple(int(i) for i in np.flatnonzero(resid >= -_FEAS_TOL)) if m_ub else ()
                return QpSolution(
                    status=OPTIMAL,
                    x=x,
                    objective=float(x @ w @ x + q @ x),
                    active=active,
                    mult_eq=mult_eq,
                    mult_ub=mult_ub,
                    iterations=iterations,
                )
            # drop the most negative multiplier; ties to the lowest constraint index
            worst = float(np.min(mu_work))
            ties = [working[k] for k in range(len(working)) if mu_work[k] <= worst + _MULT_TOL]
            working.remove(min(ties))
            continue

        # ratio test against constraints outside the working set
        alpha = 1.0 if not ray else np.inf
        blocker = -1
        for i in range(m_ub):
            if i in working:
                continue
            api = float(a_ub[i] @ p)
            if api <= 1e-12 * (1.0 + float(np.abs(a_ub[i]) @ np.abs(p))):
                continue
            gap = max(float(b_ub[i] - a_ub[i] @ x), 0.0)
            ratio = gap / api
            if ratio < alpha - 1e-12:
                alpha, blocker = ratio, i
        if ray and blocker < 0:
            return QpSolution(status=UNBOUNDED_SUBSPACE, iterations=iterations)
        x = x + alpha * p
        if blocker >= 0:
            working.append(blocker)
            working.sort()
