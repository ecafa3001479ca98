"""Validate the confidence-level machinery end to end.

Three independent routes to the same probability must agree:
analytic chi-squared CDF of the index, Monte Carlo mass of the optimal
ellipsoid, and (as an upper bound) the Monte Carlo stochastic flexibility.
The geometric guarantees are audited with uniform probes of the ellipsoid.
"""

from pathlib import Path

from flexkit import (
    UncertaintySetSpec,
    chi2_cdf,
    estimate_alpha,
    estimate_sf,
    flexibility_index,
    load_model,
    verify_solution,
)

MODELS = Path(__file__).resolve().parents[1] / "models"

for name in ("simple_beta-1", "hx_beta5"):
    model = load_model(MODELS / f"{name}.json")
    res = flexibility_index(model, UncertaintySetSpec("ellipsoid"))
    rep = verify_solution(model, res, n_probe=2000, seed=99)
    alpha_mc = estimate_alpha(model, res.delta_star, 10_000, seed=99)
    sf_mc = estimate_sf(model, 20_000, seed=99)

    print(f"{model.name}")
    print(f"  delta* = {res.delta_star:.4f}")
    print(f"  alpha* analytic          = {100 * chi2_cdf(model.n_theta, res.delta_star):.2f}%")
    print(f"  alpha  by ellipsoid MC   = {100 * alpha_mc.estimate:.2f}% "
          f"(+/- {100 * alpha_mc.stderr:.2f})")
    print(f"  SF     by feasibility MC = {100 * sf_mc.estimate:.2f}% "
          f"(+/- {100 * sf_mc.stderr:.2f})")
    print(f"  containment of 2000 probes: {'ok' if rep.containment_ok else 'VIOLATED'}"
          f" (worst psi {rep.worst_probe_psi:+.2e})")
    print(f"  critical point on both boundaries: "
          f"psi = {rep.psi_at_theta_star:+.1e}, set gap = {rep.set_measure_gap:.1e}")
    print()
