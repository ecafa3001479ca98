import itertools

import numpy as np
import pytest
import scipy.optimize

from flexkit.errors import SchemaError, UnboundedPsiError
from flexkit.flexindex import (
    confidence_level,
    flexibility_index,
    flexibility_test,
    psi,
    set_measure,
    verify_solution,
)
from flexkit.model import (
    GaussianUncertainty,
    HyperboxSpec,
    LinearConstraint,
    SystemModel,
    UncertaintySetSpec,
    box_from_sigmas,
)
from oracles import ellipsoid_index_scan, random_model

ELL = UncertaintySetSpec("ellipsoid")
BOX = UncertaintySetSpec("box")


def psi_scipy(model, theta):
    """Independent psi evaluation through scipy's LP solver."""
    m, n_z = model.n_con, model.n_z
    b = model.a_theta_matrix @ theta + model.c_vector
    c = np.zeros(n_z + 1)
    c[-1] = 1.0
    a_ub = np.hstack([model.a_z_matrix, -np.ones((m, 1))])
    res = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=-b, bounds=(None, None))
    assert res.status in (0, 3)
    return -np.inf if res.status == 3 else float(res.fun)


def rescaled(model, factor):
    """Same system with covariance scaled by `factor`."""
    return SystemModel(
        name=f"{model.name} x{factor}",
        n_z=model.n_z,
        n_theta=model.n_theta,
        constraints=tuple(
            LinearConstraint(c.name, c.a_z.copy(), c.a_theta.copy(), c.c)
            for c in model.constraints
        ),
        uncertainty=GaussianUncertainty(
            model.uncertainty.mean.copy(), factor * model.uncertainty.covariance
        ),
        hyperbox=model.hyperbox,
    )


class TestPsi:
    def test_simple_nominal(self, simple_models):
        res = psi(simple_models[0], [4.0, 5.0])
        assert res.u == pytest.approx(-4.0, abs=1e-12)
        assert res.z_star.size == 0

    def test_simple_critical_point_on_boundary(self, simple_models):
        res = psi(simple_models[0], [36.0 / 7.0, 11.0 / 7.0])
        assert abs(res.u) <= 1e-12
        assert res.active_constraints == (1,)

    def test_hx_nominal_feasible_with_recourse(self, hx_models):
        for model in hx_models.values():
            res = psi(model, model.theta_bar)
            assert res.u < 0.0
            assert res.u == pytest.approx(psi_scipy(model, model.theta_bar), abs=1e-8)
            vals = model.a_z_matrix @ res.z_star + model.a_theta_matrix @ model.theta_bar + model.c_vector
            assert np.max(vals) == pytest.approx(res.u, abs=1e-9)

    def test_unbounded_recourse(self):
        cons = [
            LinearConstraint("g0", np.array([1.0]), np.array([1.0, 0.0]), -1.0),
            LinearConstraint("g1", np.array([2.0]), np.array([0.0, 1.0]), -2.0),
        ]
        model = SystemModel(
            name="unbounded",
            n_z=1,
            n_theta=2,
            constraints=tuple(cons),
            uncertainty=GaussianUncertainty(np.zeros(2), np.eye(2)),
        )
        with pytest.raises(UnboundedPsiError):
            psi(model, np.zeros(2))

    def test_value_matches_scipy_on_random_models(self):
        rng = np.random.default_rng(30)
        for _ in range(25):
            n_z = int(rng.integers(0, 4))
            model = random_model(rng, n_theta=int(rng.integers(2, 4)), n_z=n_z)
            for _ in range(4):
                theta = model.theta_bar + rng.normal(0.0, 2.0, model.n_theta)
                mine = psi(model, theta)
                assert mine.u == pytest.approx(psi_scipy(model, theta), abs=1e-7)
                vals = (
                    model.a_z_matrix @ mine.z_star
                    + model.a_theta_matrix @ theta
                    + model.c_vector
                )
                assert np.max(vals) == pytest.approx(mine.u, abs=1e-9)

    def test_one_recourse_closed_form_matches_general_lp(self):
        # same model solved with the pair formula and, reposed with a dummy
        # second recourse column, through the simplex path
        rng = np.random.default_rng(31)
        for _ in range(15):
            model = random_model(rng, n_theta=2, n_z=1)
            padded = SystemModel(
                name="padded",
                n_z=2,
                n_theta=2,
                constraints=tuple(
                    LinearConstraint(c.name, np.array([c.a_z[0], 0.0]), c.a_theta.copy(), c.c)
                    for c in model.constraints
                ),
                uncertainty=GaussianUncertainty(
                    model.uncertainty.mean.copy(), model.uncertainty.covariance.copy()
                ),
            )
            theta = model.theta_bar + rng.normal(0.0, 1.5, 2)
            assert psi(model, theta).u == pytest.approx(psi(padded, theta).u, abs=1e-9)


class TestFlexibilityTest:
    def test_degenerate_box_is_nominal_psi(self, simple_models):
        model = simple_models[0]
        spec = UncertaintySetSpec("box", box_from_sigmas(model, 0.0))
        res = flexibility_test(model, spec, delta=1.0)
        assert res.chi == pytest.approx(-4.0, abs=1e-9)
        assert res.feasible

    def test_box_at_index_scale_touches_boundary(self, simple_models):
        model = simple_models[0]
        fstar = flexibility_index(model, BOX).delta_star
        res = flexibility_test(model, BOX, delta=fstar)
        assert abs(res.chi) <= 1e-6

    def test_box_near_literature_value(self, simple_models):
        res = flexibility_test(simple_models[0], BOX, delta=0.53)
        assert abs(res.chi) <= 0.01

    def test_full_box_infeasible(self, simple_models):
        res = flexibility_test(simple_models[0], BOX, delta=1.0)
        assert res.chi > 0.0
        assert not res.feasible

    def test_box_chi_matches_corner_scan(self, simple_models, hx_models):
        for model in list(simple_models.values()) + list(hx_models.values()):
            for delta in (0.25, 0.5, 1.0):
                res = flexibility_test(model, BOX, delta=delta)
                corners = itertools.product(
                    *[
                        (
                            model.theta_bar[i] - delta * model.hyperbox.delta_minus[i],
                            model.theta_bar[i] + delta * model.hyperbox.delta_plus[i],
                        )
                        for i in range(model.n_theta)
                    ]
                )
                ref = max(psi_scipy(model, np.array(c)) for c in corners)
                assert res.chi == pytest.approx(ref, abs=1e-7)
                # the reported worst point attains the reported worst value
                assert psi(model, res.theta_worst).u == pytest.approx(res.chi, abs=1e-7)

    def test_ellipsoid_chi_consistent_with_boundary_samples(self, simple_models):
        model = simple_models[-1]
        delta = 2.0
        res = flexibility_test(model, ELL, delta=delta)
        chol = model.uncertainty.chol
        ts = np.linspace(0.0, 2.0 * np.pi, 2000, endpoint=False)
        ring = model.theta_bar[:, None] + np.sqrt(delta) * (
            chol @ np.vstack([np.cos(ts), np.sin(ts)])
        )
        sampled = max(psi(model, ring[:, i]).u for i in range(ring.shape[1]))
        assert res.chi >= sampled - 1e-6
        assert res.chi == pytest.approx(sampled, abs=1e-3)

    def test_ellipsoid_chi_zero_at_index(self, simple_models, hx_models):
        for model in list(simple_models.values()) + list(hx_models.values()):
            dstar = flexibility_index(model, ELL).delta_star
            res = flexibility_test(model, ELL, delta=dstar)
            assert abs(res.chi) <= 1e-6
            assert psi(model, res.theta_worst).u == pytest.approx(res.chi, abs=1e-6)


class TestFlexibilityIndexSimple:
    def test_table_values(self, simple_models):
        expected = {-1: (32.0 / 9.0, 0.831), 0: (224.0 / 49.0, 0.898), 1: (25.0 / 7.0, 0.832)}
        for beta, (dstar, alpha) in expected.items():
            res = flexibility_index(simple_models[beta], ELL)
            assert res.delta_star == pytest.approx(dstar, abs=1e-9)
            assert res.alpha_star == pytest.approx(alpha, abs=5e-4)

    def test_exact_anchor_beta0(self, simple_models):
        res = flexibility_index(simple_models[0], ELL)
        assert res.delta_star == pytest.approx(224.0 / 49.0, abs=1e-9)
        assert res.theta_star == pytest.approx([36.0 / 7.0, 11.0 / 7.0], abs=1e-8)
        assert res.active_set.indices == (1,)

    def test_limiting_constraints_by_case(self, simple_models):
        assert flexibility_index(simple_models[-1], ELL).active_set.indices == (1,)
        assert flexibility_index(simple_models[0], ELL).active_set.indices == (1,)
        assert flexibility_index(simple_models[1], ELL).active_set.indices == (0,)

    def test_hyperbox_index(self, simple_models):
        for beta in (-1, 0, 1):
            res = flexibility_index(simple_models[beta], BOX)
            assert res.delta_star == pytest.approx(0.5297, abs=5e-4)
            assert res.active_set.indices == (0,)

    def test_candidate_table_complete(self, simple_models):
        res = flexibility_index(simple_models[0], ELL)
        assert len(res.candidates) == 4
        optimal = {r.indices: r.delta for r in res.candidates if r.status == "optimal"}
        assert optimal[(0,)] == pytest.approx(5.0, abs=1e-9)
        assert optimal[(1,)] == pytest.approx(224.0 / 49.0, abs=1e-9)
        assert optimal[(2,)] == pytest.approx(8.0, abs=1e-9)
        # the {f4} face minimizer (4, 0) violates f2, so theta1 clips to 2
        assert optimal[(3,)] == pytest.approx(2.0 + 25.0 / 3.0, abs=1e-9)


class TestFlexibilityIndexHx:
    def test_table_values(self, hx_models):
        res0 = flexibility_index(hx_models[0], ELL)
        assert res0.delta_star == pytest.approx(3.6004, abs=5e-4)
        assert res0.alpha_star == pytest.approx(0.5372, abs=5e-4)
        assert res0.active_set.indices == (1, 4)
        res5 = flexibility_index(hx_models[5], ELL)
        assert res5.delta_star == pytest.approx(4.6715, abs=5e-4)
        assert res5.alpha_star == pytest.approx(0.6773, abs=5e-4)
        assert res5.active_set.indices == (0, 3)

    def test_active_cardinality_is_two(self, hx_models):
        for model in hx_models.values():
            res = flexibility_index(model, ELL)
            assert len(res.active_set.indices) == model.n_z + 1 == 2

    def test_hyperbox_five_kelvin(self, hx_models):
        for model in hx_models.values():
            res = flexibility_index(model, BOX)
            assert res.delta_star == pytest.approx(0.5, abs=1e-9)
            assert np.max(res.delta_star * model.hyperbox.delta_plus) == pytest.approx(5.0, abs=1e-8)

    def test_ellipsoid_radius_in_kelvin(self, hx_models):
        res = flexibility_index(hx_models[0], ELL)
        assert np.sqrt(res.delta_star * 11.11) == pytest.approx(6.325, abs=5e-3)

    def test_candidate_values_against_pair_closed_form(self, hx_models):
        # eliminating the recourse with the candidate multipliers gives
        # delta = g(mean)^2 / (a @ V @ a) for the pair's own face; that is a
        # lower bound on the constrained subproblem and exact at the winner
        from flexkit.activeset import enumerate_candidates

        for beta, model in hx_models.items():
            res = flexibility_index(model, ELL)
            cov = model.uncertainty.covariance
            b0 = model.a_theta_matrix @ model.theta_bar + model.c_vector
            lams = {c.indices: c.lam for c in enumerate_candidates(model)}
            for rep in res.candidates:
                idx = list(rep.indices)
                a = model.a_theta_matrix[idx].T @ lams[rep.indices]
                g0 = float(lams[rep.indices] @ b0[idx])
                closed = g0 * g0 / float(a @ cov @ a)
                if rep.status == "optimal":
                    assert rep.delta >= closed - 1e-9
            winner = res.active_set.indices
            idx = list(winner)
            a = model.a_theta_matrix[idx].T @ lams[winner]
            g0 = float(lams[winner] @ b0[idx])
            assert res.delta_star == pytest.approx(g0 * g0 / float(a @ cov @ a), rel=1e-12)


class TestNormSets:
    def test_linf_is_unit_box(self, simple_models):
        model = simple_models[0]
        linf = flexibility_index(model, UncertaintySetSpec("linf"))
        unit_box = flexibility_index(
            model, UncertaintySetSpec("box", HyperboxSpec(np.ones(2), np.ones(2)))
        )
        assert linf.delta_star == pytest.approx(unit_box.delta_star, abs=1e-9)

    def test_l2_squares_to_identity_ellipsoid(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            model = random_model(rng, n_theta=2, n_z=0)
            ident = SystemModel(
                name="ident",
                n_z=0,
                n_theta=2,
                constraints=model.constraints,
                uncertainty=GaussianUncertainty(model.theta_bar.copy(), np.eye(2)),
            )
            ell = flexibility_index(ident, ELL).delta_star
            l2 = flexibility_index(ident, UncertaintySetSpec("l2")).delta_star
            assert ell == pytest.approx(l2 * l2, rel=1e-8)

    def test_l1_matches_direct_distance(self, simple_models):
        # n_z = 0: the l1 index is the smallest l1 distance from the mean to
        # any feasible piece of a constraint hyperplane
        model = simple_models[0]
        res = flexibility_index(model, UncertaintySetSpec("l1"))
        assert res.delta_star == pytest.approx(
            set_measure(model, UncertaintySetSpec("l1"), res.theta_star), abs=1e-9
        )
        # f2 at l1 distance: |f2(mean)| / max|coef| = 8 / 2
        assert res.delta_star == pytest.approx(4.0, abs=1e-9)

    def test_all_norm_kinds_satisfy_boundary_conditions(self, simple_models):
        model = simple_models[1]
        for kind in ("l1", "l2", "linf"):
            spec = UncertaintySetSpec(kind)
            res = flexibility_index(model, spec)
            assert abs(psi(model, res.theta_star).u) <= 1e-7
            assert set_measure(model, spec, res.theta_star) == pytest.approx(
                res.delta_star, abs=1e-7
            )

    def test_norm_kinds_test_index_consistency(self, simple_models):
        # the flexibility test at the computed index must sit on the boundary
        # for every set family, including the quadratic l2 route
        model = simple_models[0]
        for kind in ("l1", "l2", "linf"):
            spec = UncertaintySetSpec(kind)
            dstar = flexibility_index(model, spec).delta_star
            res = flexibility_test(model, spec, delta=dstar)
            assert abs(res.chi) <= 1e-6
            assert flexibility_test(model, spec, delta=1.2 * dstar).chi > 0.0
            assert flexibility_test(model, spec, delta=0.8 * dstar).chi < 0.0


class TestIndexInvariants:
    def test_boundary_conditions_on_bundled(self, bundled_models):
        for model in bundled_models.values():
            res = flexibility_index(model, ELL)
            assert abs(psi(model, res.theta_star).u) <= 1e-7
            assert set_measure(model, ELL, res.theta_star) == pytest.approx(
                res.delta_star, abs=1e-7
            )
            assert len(res.active_set.indices) == model.n_z + 1
            assert res.delta_star == pytest.approx(
                min(r.delta for r in res.candidates if r.status == "optimal"), abs=1e-9
            )

    def test_covariance_scaling(self, bundled_models):
        for model in bundled_models.values():
            base = flexibility_index(model, ELL).delta_star
            for c in (0.5, 2.0, 10.0):
                scaled = flexibility_index(rescaled(model, c), ELL).delta_star
                assert scaled * c == pytest.approx(base, rel=1e-8)

    def test_monotone_under_added_constraint(self):
        rng = np.random.default_rng(34)
        for _ in range(12):
            model = random_model(rng, n_theta=2, n_z=0)
            base = flexibility_index(model, ELL).delta_star
            a = rng.normal(size=2)
            margin = rng.uniform(0.2, 2.0)
            extra = LinearConstraint("extra", np.zeros(0), a, float(-(a @ model.theta_bar) - margin))
            tighter = SystemModel(
                name="tighter",
                n_z=0,
                n_theta=2,
                constraints=model.constraints + (extra,),
                uncertainty=GaussianUncertainty(
                    model.theta_bar.copy(), model.uncertainty.covariance.copy()
                ),
            )
            assert flexibility_index(tighter, ELL).delta_star <= base + 1e-9

    def test_scan_oracle_equivalence_2d(self):
        rng = np.random.default_rng(35)
        for _ in range(8):
            model = random_model(rng, n_theta=2, n_z=int(rng.integers(0, 2)))
            res = flexibility_index(model, ELL)
            ref = ellipsoid_index_scan(model)
            assert res.delta_star == pytest.approx(ref, abs=1e-4, rel=1e-4)

    def test_deterministic_tie_breaks_lexicographic(self):
        cons = (
            LinearConstraint("right", np.zeros(0), np.array([1.0, 0.0]), -1.0),
            LinearConstraint("left", np.zeros(0), np.array([-1.0, 0.0]), -1.0),
        )
        model = SystemModel(
            name="symmetric",
            n_z=0,
            n_theta=2,
            constraints=cons,
            uncertainty=GaussianUncertainty(np.zeros(2), np.eye(2)),
        )
        res = flexibility_index(model, ELL)
        assert res.delta_star == pytest.approx(1.0, abs=1e-9)
        assert res.active_set.indices == (0,)
        assert res.ties == ((0,), (1,))

    def test_not_interior_flag(self, simple_models):
        model = simple_models[0]
        shifted = SystemModel(
            name="outside",
            n_z=0,
            n_theta=2,
            constraints=model.constraints,
            uncertainty=GaussianUncertainty(np.array([20.0, 20.0]), np.eye(2)),
            hyperbox=model.hyperbox,
        )
        for spec in (ELL, BOX, UncertaintySetSpec("l2")):
            res = flexibility_index(shifted, spec)
            assert res.not_interior
            assert res.delta_star == 0.0
        assert flexibility_index(shifted, ELL).alpha_star == 0.0

    def test_box_without_deviations_raises(self, simple_models):
        model = simple_models[0]
        bare = SystemModel(
            name="bare",
            n_z=0,
            n_theta=2,
            constraints=model.constraints,
            uncertainty=GaussianUncertainty(model.theta_bar.copy(), np.eye(2)),
        )
        with pytest.raises(SchemaError):
            flexibility_index(bare, BOX)


class TestConfidenceLevel:
    def test_values(self):
        assert confidence_level(224.0 / 49.0, 2) == pytest.approx(0.8983, abs=1e-4)
        assert confidence_level(0.0, 5) == 0.0
        assert confidence_level(3.6004, 4) == pytest.approx(0.5372, abs=1e-4)

    def test_matches_closed_form_2dof(self):
        for d in (0.5, 3.56, 4.57):
            assert confidence_level(d, 2) == pytest.approx(1.0 - np.exp(-d / 2.0), abs=1e-12)


class TestVerifySolution:
    def test_correct_result_passes(self, simple_models):
        model = simple_models[0]
        res = flexibility_index(model, ELL)
        rep = verify_solution(model, res, n_probe=400, seed=123)
        assert rep.passed
        assert rep.worst_probe_psi <= 1e-6
        assert abs(rep.psi_at_theta_star) <= 1e-7
        assert rep.set_measure_gap <= 1e-7

    def test_inflated_delta_fails_containment(self, simple_models):
        import dataclasses

        model = simple_models[0]
        res = flexibility_index(model, ELL)
        bad = dataclasses.replace(res, delta_star=1.5 * res.delta_star)
        rep = verify_solution(model, bad, n_probe=400, seed=123)
        assert rep.containment_ok is False
        assert not rep.passed

    def test_zero_probes_checks_boundaries_only(self, simple_models):
        model = simple_models[0]
        res = flexibility_index(model, ELL)
        rep = verify_solution(model, res, n_probe=0, seed=5)
        assert rep.containment_ok is None
        assert rep.passed

    def test_requires_ellipsoid(self, simple_models):
        res = flexibility_index(simple_models[0], BOX)
        with pytest.raises(ValueError):
            verify_solution(simple_models[0], res, n_probe=0, seed=0)
