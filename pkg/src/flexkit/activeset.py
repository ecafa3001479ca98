"""Enumeration of candidate active constraint sets.

At a critical point of the worst-case feasibility problem, exactly
``n_z + 1`` constraints are active and their multipliers satisfy

    sum(lam) = 1,    sum(lam_j * a_z_j) = 0,    lam >= 0.

For an affine system these multiplier conditions do not involve the point
itself, so the combinatorial part of the problem separates cleanly: this
module walks all C(|J|, n_z + 1) subsets in lexicographic order and keeps
those whose multiplier system is feasible.  Each survivor becomes one convex
subproblem downstream, which removes both the binary variables and the big-M
slack bound a mixed-integer formulation would need.  Candidates with some
lam_j = 0 (weakly active sets) are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import linalg
from .errors import NoCandidatesError
from .lp import OPTIMAL, LpProblem, solve_lp
from .model import SystemModel

__all__ = ["ActiveCandidate", "multiplier_check", "enumerate_candidates"]

_LAM_TOL = 1e-9


@dataclass(frozen=True)
class ActiveCandidate:
    """A multiplier-feasible subset of n_z + 1 constraints."""

    indices: tuple[int, ...]
    lam: np.ndarray
    gradient_rank: int

    def names(self, model: SystemModel) -> tuple[str, ...]:
        return tuple(model.constraints[j].name for j in self.indices)


def multiplier_check(model: SystemModel, subset) -> np.ndarray | None:
    """Multipliers for the subset, or None when the system is infeasible.

    Solves sum(lam) = 1, A_z[subset].T @ lam = 0, lam >= 0 as an LP
    feasibility problem, so rank-deficient gradient stacks need no special
    casing.  The returned lam is the deterministic basic solution.
    """
    subset = tuple(int(j) for j in subset)
    if len(subset) != model.n_z + 1:
        raise ValueError(f"subset size {len(subset)} != n_z + 1 = {model.n_z + 1}")
    k = len(subset)
    a_z = model.a_z_matrix[list(subset)]           # k x n_z
    a_eq = np.vstack([np.ones((1, k)), a_z.T])     # (1 + n_z) x k
    b_eq = np.zeros(1 + model.n_z)
    b_eq[0] = 1.0
    sol = solve_lp(
        LpProblem("min", np.zeros(k), a_eq=a_eq, b_eq=b_eq, lb=np.zeros(k))
    )
    if sol.status != OPTIMAL:
        return None
    lam = np.maximum(sol.x, 0.0)
    lam /= lam.sum()
    return lam


def enumerate_candidates(model: SystemModel) -> list[ActiveCandidate]:
    """All multiplier-feasible subsets of size n_z + 1, in lexicographic order.

    Raises NoCandidatesError when every subset fails: the recourse can then
    improve all constraints at once and the worst-case problem is unbounded
    in that direction.
    """
    m = model.n_con
    k = model.n_z + 1
    if m < k:
        raise NoCandidatesError(f"need at least {k} constraints, model has {m}")
    out = []
    for subset in combinations(range(m), k):
        lam = multiplier_check(model, subset)
        if lam is None:
            continue
        rows = np.hstack([model.a_z_matrix[list(subset)], model.a_theta_matrix[list(subset)]])
        out.append(
            ActiveCandidate(
                indices=subset,
                lam=lam,
                gradient_rank=linalg.row_rank(rows, 1e-10),
            )
        )
    if not out:
        raise NoCandidatesError("no constraint subset admits valid multipliers")
    return out
