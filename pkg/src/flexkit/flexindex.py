"""Feasibility function, flexibility test, and flexibility index.

The feasibility function psi(theta) is the smallest achievable worst
constraint value at a fixed parameter realization, optimizing the recourse.
The flexibility test asks for the worst psi over an uncertainty set; the
flexibility index asks for the largest scaling of a parameterized set that
keeps psi <= 0 everywhere.

All set families are handled through one mechanism: candidate active sets
from :mod:`flexkit.activeset` each yield a convex subproblem in which the
candidate constraints hold with equality, every other constraint stays
feasible (with a shared recourse), and the set-size measure is minimized.
The index is the smallest candidate value; the critical point inherits the
classic geometry: it lies on the feasible-region boundary and on the
boundary of the scaled uncertainty set, and for the ellipsoidal family the
index maps through the chi-squared CDF to a confidence level, a lower bound
on the probability of feasible operation.

Ellipsoid conventions: the set is (theta - mean) @ Vinv @ (theta - mean)
<= delta, so delta is a squared Mahalanobis radius.  The l1/l2/linf
families measure plain norm radii of theta - mean, and the hyperbox scales
the per-component deviation vectors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import stats
from .activeset import ActiveCandidate, enumerate_candidates
from .errors import FlexkitError, SchemaError, UnboundedPsiError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, solve_lp
from .model import HyperboxSpec, SystemModel, UncertaintySetSpec
from .qp import QpProblem, solve_qp

__all__ = [
    "PsiResult",
    "ChiResult",
    "CandidateReport",
    "IndexResult",
    "VerificationReport",
    "psi",
    "flexibility_test",
    "flexibility_index",
    "confidence_level",
    "verify_solution",
    "set_measure",
]

_ACTIVE_TOL = 1e-9
_TIE_TOL = 1e-9
_U_BISECT_TOL = 1e-8
_QP_FEAS_MARGIN = 1e-9


@dataclass(frozen=True)
class PsiResult:
    """Value and argmin of the feasibility function at one theta."""

    u: float
    z_star: np.ndarray
    active_constraints: tuple[int, ...]


@dataclass(frozen=True)
class ChiResult:
    """Worst-case psi over a fixed uncertainty set."""

    chi: float
    theta_worst: np.ndarray
    feasible: bool
    candidates: tuple = ()


@dataclass(frozen=True)
class CandidateReport:
    """Per-candidate diagnostic row of an index computation."""

    indices: tuple[int, ...]
    names: tuple[str, ...]
    status: str           # "optimal" | "infeasible" | "skipped"
    delta: float | None
    note: str = ""


@dataclass(frozen=True)
class IndexResult:
    """Flexibility index for one uncertainty-set family.

    delta_star is in set-dependent units: squared Mahalanobis radius for the
    ellipsoid, a norm radius for l1/l2/linf, and the deviation-scaling factor
    for the hyperbox.  alpha_star is populated for the ellipsoid only.
    """

    set_kind: str
    delta_star: float
    theta_star: np.ndarray
    z_star: np.ndarray
    active_set: ActiveCandidate | None
    alpha_star: float | None
    candidates: tuple[CandidateReport, ...]
    units: str
    not_interior: bool = False
    psi_nominal: float = np.nan
    ties: tuple[tuple[int, ...], ...] = ()
    elapsed: float = 0.0


@dataclass(frozen=True)
class VerificationReport:
    """Containment and boundary checks for an ellipsoidal index result."""

    containment_ok: bool | None
    boundary_feasible_ok: bool
    boundary_set_ok: bool
    worst_probe_psi: float
    psi_at_theta_star: float
    set_measure_gap: float
    n_probe: int

    @property
    def passed(self) -> bool:
        checks = [self.boundary_feasible_ok, self.boundary_set_ok]
        if self.containment_ok is not None:
            checks.append(self.containment_ok)
        return all(checks)


def psi(model: SystemModel, theta) -> PsiResult:
    """Smallest worst-constraint value at theta, optimizing the recourse.

    Solves min_u { u : f_j(z, theta) <= u } over (z, u).  Raises
    UnboundedPsiError when the recourse drives every constraint to -inf.
    """
    theta = np.asarray(theta, dtype=float)
    b = model.a_theta_matrix @ theta + model.c_vector
    n_z = model.n_z
    if n_z == 0:
        u = float(np.max(b))
        z = np.zeros(0)
    elif n_z == 1:
        u, z0 = _psi_one_recourse(model.a_z_matrix[:, 0], b)
        z = np.array([z0])
    else:
        u, z = _psi_lp(model, b)
    vals = model.a_z_matrix @ z + b
    scale = 1.0 + abs(u)
    active = tuple(int(j) for j in np.flatnonzero(vals >= u - _ACTIVE_TOL * scale))
    return PsiResult(u=u, z_star=z, active_constraints=active)


def _psi_one_recourse(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Exact min-max of lines a_j * z + b_j; the LP dual has closed form."""
    neg = a < -1e-14
    pos = a > 1e-14
    zero = ~(neg | pos)
    best = -np.inf
    if np.any(zero):
        best = float(np.max(b[zero]))
    if np.any(neg) and np.any(pos):
        ai, bi = a[neg], b[neg]
        ak, bk = a[pos], b[pos]
        cross = (np.outer(bi, ak) - np.outer(ai, bk)) / (ak[None, :] - ai[:, None])
        best = max(best, float(np.max(cross)))
    if not np.isfinite(best):
        raise UnboundedPsiError("recourse drives every constraint to -inf")
    # deterministic recourse: the point of the optimal interval closest to 0
    lo = float(np.max((best - b[neg]) / a[neg])) if np.any(neg) else -np.inf
    hi = float(np.min((best - b[pos]) / a[pos])) if np.any(pos) else np.inf
    z = min(max(0.0, lo), hi)
    return best, z


def _psi_lp(model: SystemModel, b: np.ndarray) -> tuple[float, np.ndarray]:
    n_z = model.n_z
    m = model.n_con
    a_ub = np.hstack([model.a_z_matrix, -np.ones((m, 1))])
    c = np.zeros(n_z + 1)
    c[-1] = 1.0
    sol = solve_lp(LpProblem("min", c, a_ub=a_ub, b_ub=-b))
    if sol.status == UNBOUNDED:
        raise UnboundedPsiError("recourse drives every constraint to -inf")
    if sol.status != OPTIMAL:  # pragma: no cover - the problem is always feasible
        raise RuntimeError(f"psi LP returned {sol.status}")
    return float(sol.objective), sol.x[:n_z]


def confidence_level(delta_star: float, n_theta: int) -> float:
    """Chi-squared CDF of the squared Mahalanobis radius: the probability mass
    of the inscribed ellipsoid, and a lower bound on the stochastic
    flexibility index."""
    if delta_star < 0:
        raise ValueError("delta_star must be nonnegative")
    return stats.chi2_cdf(n_theta, delta_star)


# ---------------------------------------------------------------------------
# shared subproblem plumbing


def _resolve_box(model: SystemModel, set_spec: UncertaintySetSpec) -> HyperboxSpec:
    box = set_spec.hyperbox if set_spec.hyperbox is not None else model.hyperbox
    if box is None:
        raise SchemaError("box set requires a hyperbox block (model or set spec)")
    return box


def _vinv(model: SystemModel) -> np.ndarray:
    chol = model.uncertainty.chol
    vinv = scipy.linalg.cho_solve((chol, True), np.eye(model.n_theta), check_finite=False)
    return 0.5 * (vinv + vinv.T)


def set_measure(model: SystemModel, set_spec: UncertaintySetSpec, theta) -> float:
    """Size of the smallest set of the family containing theta (its delta)."""
    d = np.asarray(theta, dtype=float) - model.theta_bar
    kind = set_spec.kind
    if kind == "ellipsoid":
        half = scipy.linalg.solve_triangular(
            model.uncertainty.chol, d, lower=True, check_finite=False
        )
        return float(half @ half)
    if kind == "l1":
        return float(np.sum(np.abs(d)))
    if kind == "l2":
        return float(np.linalg.norm(d))
    if kind == "linf":
        return float(np.max(np.abs(d)))
    box = _resolve_box(model, set_spec)
    ratios = [0.0]
    for di, dp, dm in zip(d, box.delta_plus, box.delta_minus):
        if di > 0:
            ratios.append(np.inf if dp == 0 and di > 1e-12 else (di / dp if dp else 0.0))
        elif di < 0:
            ratios.append(np.inf if dm == 0 and di < -1e-12 else (-di / dm if dm else 0.0))
    return float(max(ratios))


def _index_subproblem(model, candidate, kind, vinv, box):
    """Minimum set size with the candidate constraints active; None when the
    candidate admits no point (status carries the reason)."""
    m, n_z, n_t = model.n_con, model.n_z, model.n_theta
    act = list(candidate.indices)
    inact = [j for j in range(m) if j not in candidate.indices]
    b0 = model.a_theta_matrix @ model.theta_bar + model.c_vector
    a_th, a_z = model.a_theta_matrix, model.a_z_matrix

    if kind in ("ellipsoid", "l2"):
        n = n_t + n_z
        w = np.zeros((n, n))
        w[:n_t, :n_t] = vinv if kind == "ellipsoid" else np.eye(n_t)
        a_eq = np.hstack([a_th[act], a_z[act]])
        a_ub = np.hstack([a_th[inact], a_z[inact]])
        sol = solve_qp(
            QpProblem(w, np.zeros(n), a_eq=a_eq, b_eq=-b0[act], a_ub=a_ub, b_ub=-b0[inact])
        )
        if sol.status != OPTIMAL:
            return None, sol.status
        delta = float(sol.objective)
        if kind == "l2":
            delta = float(np.sqrt(max(delta, 0.0)))
        return (delta, model.theta_bar + sol.x[:n_t], sol.x[n_t:]), OPTIMAL

    # polyhedral families: LP over (d, z, delta) or (p, q, z, delta) for l1
    if kind == "l1":
        n = 2 * n_t + n_z + 1
        col_p, col_q = slice(0, n_t), slice(n_t, 2 * n_t)
        col_z, col_d = slice(2 * n_t, 2 * n_t + n_z), n - 1
        rows_eq = np.zeros((len(act), n))
        rows_eq[:, col_p] = a_th[act]
        rows_eq[:, col_q] = -a_th[act]
        rows_eq[:, col_z] = a_z[act]
        rows_ub = np.zeros((len(inact) + 1, n))
        rows_ub[:-1, col_p] = a_th[inact]
        rows_ub[:-1, col_q] = -a_th[inact]
        rows_ub[:-1, col_z] = a_z[inact]
        rows_ub[-1, col_p] = 1.0
        rows_ub[-1, col_q] = 1.0
        rows_ub[-1, col_d] = -1.0
        b_ub = np.concatenate([-b0[inact], [0.0]])
        lb = np.concatenate([np.zeros(2 * n_t), np.full(n_z, -np.inf), [0.0]])
        c = np.zeros(n)
        c[col_d] = 1.0
        sol = solve_lp(LpProblem("min", c, a_eq=rows_eq, b_eq=-b0[act], a_ub=rows_ub, b_ub=b_ub, lb=lb))
        if sol.status != OPTIMAL:
            return None, sol.status if sol.status == INFEASIBLE else "skipped"
        d = sol.x[col_p] - sol.x[col_q]
        return (float(sol.objective), model.theta_bar + d, sol.x[col_z]), OPTIMAL

    n = n_t + n_z + 1
    col_d, col_z, col_s = slice(0, n_t), slice(n_t, n_t + n_z), n - 1
    rows_eq = np.zeros((len(act), n))
    rows_eq[:, col_d] = a_th[act]
    rows_eq[:, col_z] = a_z[act]
    rows_in = np.zeros((len(inact), n))
    rows_in[:, col_d] = a_th[inact]
    rows_in[:, col_z] = a_z[inact]
    if kind == "box":
        dp, dm = box.delta_plus, box.delta_minus
    else:  # linf is a unit box
        dp = dm = np.ones(n_t)
    upper = np.zeros((n_t, n))
    upper[:, col_d] = np.eye(n_t)
    upper[:, col_s] = -dp
    lower = np.zeros((n_t, n))
    lower[:, col_d] = -np.eye(n_t)
    lower[:, col_s] = -dm
    a_ub = np.vstack([rows_in, upper, lower])
    b_ub = np.concatenate([-b0[inact], np.zeros(2 * n_t)])
    lb = np.concatenate([np.full(n_t + n_z, -np.inf), [0.0]])
    c = np.zeros(n)
    c[col_s] = 1.0
    sol = solve_lp(LpProblem("min", c, a_eq=rows_eq, b_eq=-b0[act], a_ub=a_ub, b_ub=b_ub, lb=lb))
    if sol.status != OPTIMAL:
        return None, sol.status if sol.status == INFEASIBLE else "skipped"
    return (float(sol.objective), model.theta_bar + sol.x[col_d], sol.x[col_z]), OPTIMAL


def flexibility_index(model: SystemModel, set_spec: UncertaintySetSpec) -> IndexResult:
    """Largest uncertainty-set scaling with feasible operation throughout.

    Every candidate active set yields one convex subproblem (QP for
    ellipsoid/l2, LP otherwise); the index is the smallest candidate value,
    ties broken to the lexicographically smallest subset.  When the nominal
    point is not strictly feasible the index is 0 by convention and the
    result carries ``not_interior=True``.
    """
    t0 = time.perf_counter()
    kind = set_spec.kind
    box = _resolve_box(model, set_spec) if kind == "box" else None
    if box is not None and not (np.any(box.delta_minus) or np.any(box.delta_plus)):
        raise SchemaError("hyperbox deviations are all zero; the index is unbounded")
    vinv = _vinv(model) if kind == "ellipsoid" else None

    psi_nominal = psi(model, model.theta_bar).u
    if psi_nominal >= 0.0:
        return IndexResult(
            set_kind=kind,
            delta_star=0.0,
            theta_star=model.theta_bar.copy(),
            z_star=np.zeros(model.n_z),
            active_set=None,
            alpha_star=0.0 if kind == "ellipsoid" else None,
            candidates=(),
            units=_units(kind),
            not_interior=True,
            psi_nominal=psi_nominal,
            elapsed=time.perf_counter() - t0,
        )

    candidates = enumerate_candidates(model)
    reports: list[CandidateReport] = []
    solutions: dict[int, tuple[float, np.ndarray, np.ndarray]] = {}
    for idx, cand in enumerate(candidates):
        out, status = _index_subproblem(model, cand, kind, vinv, box)
        names = cand.names(model)
        if out is None:
            note = "no point satisfies this active set" if status == INFEASIBLE else status
            reports.append(CandidateReport(cand.indices, names, "infeasible", None, note))
            continue
        delta, theta_c, z_c = out
        solutions[idx] = (delta, theta_c, z_c)
        reports.append(CandidateReport(cand.indices, names, "optimal", delta, ""))

    if not solutions:
        raise FlexkitError(
            "every candidate subproblem is infeasible; the feasible region has no "
            "boundary and the index is unbounded"
        )

    best = min(d for d, _, _ in solutions.values())
    tie_ids = [i for i, (d, _, _) in sorted(solutions.items()) if d <= best + _TIE_TOL]
    winner_id = min(tie_ids, key=lambda i: candidates[i].indices)
    delta_star, theta_star, z_star = solutions[winner_id]
    ties = tuple(candidates[i].indices for i in tie_ids) if len(tie_ids) > 1 else ()

    alpha = confidence_level(delta_star, model.n_theta) if kind == "ellipsoid" else None
    return IndexResult(
        set_kind=kind,
        delta_star=delta_star,
        theta_star=theta_star,
        z_star=z_star,
        active_set=candidates[winner_id],
        alpha_star=alpha,
        candidates=tuple(reports),
        units=_units(kind),
        psi_nominal=psi_nominal,
        ties=ties,
        elapsed=time.perf_counter() - t0,
    )


def _units(kind: str) -> str:
    if kind == "ellipsoid":
        return "squared Mahalanobis radius"
    if kind == "box":
        return "deviation-scaling factor"
    return f"{kind} norm radius"


def flexibility_test(model: SystemModel, set_spec: UncertaintySetSpec, delta: float = 1.0) -> ChiResult:
    """Worst-case psi over the set at a fixed scale delta.

    chi <= 0 certifies feasible operation over the whole set.  Polyhedral
    families solve one LP per candidate; the ellipsoid solves a bisection on
    the worst value with a QP feasibility check per probe (tolerance 1e-8).
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    kind = set_spec.kind
    box = _resolve_box(model, set_spec) if kind == "box" else None

    candidates = enumerate_candidates(model)
    chi = -np.inf
    theta_worst = model.theta_bar.copy()
    table = []
    for cand in candidates:
        if kind == "ellipsoid":
            out = _test_quadratic_candidate(
                model, cand, delta, _vinv(model), model.uncertainty.covariance
            )
        elif kind == "l2":
            # the l2 ball of radius delta is the identity-weighted quadratic
            # set of squared radius delta^2
            eye = np.eye(model.n_theta)
            out = _test_quadratic_candidate(model, cand, delta * delta, eye, eye)
        else:
            out = _test_polyhedral_candidate(model, cand, delta, kind, box)
        if out is None:
            table.append((cand.indices, "infeasible", None))
            continue
        u_c, theta_c = out
        table.append((cand.indices, "optimal", u_c))
        if u_c > chi:
            chi, theta_worst = u_c, theta_c
    if not np.isfinite(chi):
        raise FlexkitError("no candidate admits a point in the uncertainty set")
    return ChiResult(chi=float(chi), theta_worst=theta_worst, feasible=bool(chi <= _ACTIVE_TOL), candidates=tuple(table))


def _test_polyhedral_candidate(model, cand, delta, kind, box):
    m, n_z, n_t = model.n_con, model.n_z, model.n_theta
    act = list(cand.indices)
    inact = [j for j in range(m) if j not in cand.indices]
    b0 = model.a_theta_matrix @ model.theta_bar + model.c_vector
    a_th, a_z = model.a_theta_matrix, model.a_z_matrix

    if kind == "l1":
        n = 2 * n_t + n_z + 1
        cp, cq = slice(0, n_t), slice(n_t, 2 * n_t)
        cz, cu = slice(2 * n_t, 2 * n_t + n_z), n - 1

        def fill(rows, js):
            rows[:, cp] = a_th[js]
            rows[:, cq] = -a_th[js]
            rows[:, cz] = a_z[js]
            rows[:, cu] = -1.0

        a_eq = np.zeros((len(act), n))
        fill(a_eq, act)
        a_ub = np.zeros((len(inact) + 1, n))
        if inact:
            fill(a_ub[:-1], inact)
        a_ub[-1] = 0.0
        a_ub[-1, cp] = 1.0
        a_ub[-1, cq] = 1.0
        b_ub = np.concatenate([-b0[inact], [delta]])
        lb = np.concatenate([np.zeros(2 * n_t), np.full(n_z + 1, -np.inf)])
        c = np.zeros(n)
        c[cu] = 1.0
        sol = solve_lp(LpProblem("max", c, a_eq=a_eq, b_eq=-b0[act], a_ub=a_ub, b_ub=b_ub, lb=lb))
        if sol.status != OPTIMAL:
            return None
        return float(sol.objective), model.theta_bar + sol.x[cp] - sol.x[cq]

    n = n_t + n_z + 1
    cd, cz, cu = slice(0, n_t), slice(n_t, n_t + n_z), n - 1
    a_eq = np.zeros((len(act), n))
    a_eq[:, cd] = a_th[act]
    a_eq[:, cz] = a_z[act]
    a_eq[:, cu] = -1.0
    rows_in = np.zeros((len(inact), n))
    rows_in[:, cd] = a_th[inact]
    rows_in[:, cz] = a_z[inact]
    rows_in[:, cu] = -1.0
    if kind == "box":
        dp, dm = delta * box.delta_plus, delta * box.delta_minus
    else:
        dp = dm = delta * np.ones(n_t)
    upper = np.zeros((n_t, n))
    upper[:, cd] = np.eye(n_t)
    lower = np.zeros((n_t, n))
    lower[:, cd] = -np.eye(n_t)
    a_ub = np.vstack([rows_in, upper, lower])
    b_ub = np.concatenate([-b0[inact], dp, dm])
    c = np.zeros(n)
    c[cu] = 1.0
    sol = solve_lp(LpProblem("max", c, a_eq=a_eq, b_eq=-b0[act], a_ub=a_ub, b_ub=b_ub))
    if sol.status != OPTIMAL:
        return None
    return float(sol.objective), model.theta_bar + sol.x[cd]


def _test_quadratic_candidate(model, cand, delta, vinv, cov):
    """max u over the candidate system with (theta - mean) @ vinv @ (theta -
    mean) <= delta, by bisection on u over QP feasibility probes."""
    m, n_z, n_t = model.n_con, model.n_z, model.n_theta
    act = list(cand.indices)
    inact = [j for j in range(m) if j not in cand.indices]
    b0 = model.a_theta_matrix @ model.theta_bar + model.c_vector
    a_th, a_z = model.a_theta_matrix, model.a_z_matrix

    # minimum Mahalanobis size over the candidate system with u free
    n = n_t + n_z + 1
    w = np.zeros((n, n))
    w[:n_t, :n_t] = vinv
    a_eq = np.hstack([a_th[act], a_z[act], -np.ones((len(act), 1))])
    a_ub = np.hstack([a_th[inact], a_z[inact], -np.ones((len(inact), 1))])
    free = solve_qp(QpProblem(w, np.zeros(n), a_eq=a_eq, b_eq=-b0[act], a_ub=a_ub, b_ub=-b0[inact]))
    if free.status != OPTIMAL or free.objective > delta + _QP_FEAS_MARGIN:
        return None
    u_lo = float(free.x[-1])
    d_best = free.x[:n_t]

    # any valid multiplier bounds u over the ellipsoid
    g = a_th[act].T @ cand.lam
    u_hi = float(cand.lam @ b0[act] + np.sqrt(max(delta * (g @ cov @ g), 0.0))) + 1.0

    w2 = w[: n_t + n_z, : n_t + n_z]
    a_eq2 = np.hstack([a_th[act], a_z[act]])
    a_ub2 = np.hstack([a_th[inact], a_z[inact]])

    def feasible(u):
        sol = solve_qp(
            QpProblem(
                w2,
                np.zeros(n_t + n_z),
                a_eq=a_eq2,
                b_eq=u - b0[act],
                a_ub=a_ub2,
                b_ub=u - b0[inact],
            )
        )
        if sol.status != OPTIMAL or sol.objective > delta + _QP_FEAS_MARGIN:
            return None
        return sol.x[:n_t]

    while u_hi - u_lo > _U_BISECT_TOL:
        mid = 0.5 * (u_lo + u_hi)
        d = feasible(mid)
        if d is None:
            u_hi = mid
        else:
            u_lo, d_best = mid, d
    return u_lo, model.theta_bar + d_best


def verify_solution(model: SystemModel, result: IndexResult, n_probe: int, seed: int) -> VerificationReport:
    """Audit an ellipsoidal index result against its guaranteed geometry:
    (i) n_probe uniform draws from the optimal ellipsoid all satisfy
    psi <= 1e-6, (ii) psi(theta_star) = 0 within 1e-7, (iii) theta_star lies
    on the ellipsoid boundary within 1e-7."""
    if result.set_kind != "ellipsoid":
        raise ValueError("verification applies to ellipsoidal results")
    spec = UncertaintySetSpec("ellipsoid")
    psi_star = psi(model, result.theta_star).u
    gap = abs(set_measure(model, spec, result.theta_star) - result.delta_star)

    containment_ok: bool | None = None
    worst = -np.inf
    if n_probe > 0:
        rng = stats.make_rng(seed)
        chol = model.uncertainty.chol
        n = model.n_theta
        radius = np.sqrt(result.delta_star)
        for _ in range(n_probe):
            w = stats.standard_normals(rng, n)
            norm = float(np.linalg.norm(w))
            if norm == 0.0:  # pragma: no cover
                continue
            r = rng.random() ** (1.0 / n)
            theta = model.theta_bar + chol @ (w * (radius * r / norm))
            worst = max(worst, psi(model, theta).u)
        containment_ok = bool(worst <= 1e-6)
    return VerificationReport(
        containment_ok=containment_ok,
        boundary_feasible_ok=bool(abs(psi_star) <= 1e-7),
        boundary_set_ok=bool(gap <= 1e-7),
        worst_probe_psi=float(worst),
        psi_at_theta_star=float(psi_star),
        set_measure_gap=float(gap),
        n_probe=n_probe,
    )
