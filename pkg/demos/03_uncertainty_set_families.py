"""Compare uncertainty-set families on one system.

The same active-set decomposition drives every family; only the
per-candidate subproblem changes (QP for quadratic set measures, LP for
polyhedral ones).  Note the units: the ellipsoid index is a squared
Mahalanobis radius, the norm families are plain radii, and the hyperbox
index scales a deviation specification.
"""

from pathlib import Path

from flexkit import UncertaintySetSpec, flexibility_index, load_model, psi

MODELS = Path(__file__).resolve().parents[1] / "models"
model = load_model(MODELS / "simple_beta0.json")

print(f"model: {model.name}")
print(f"{'family':>10} {'delta*':>9} {'limiting':>9}  units")
for kind in ("ellipsoid", "box", "l1", "l2", "linf"):
    res = flexibility_index(model, UncertaintySetSpec(kind))
    names = ",".join(res.active_set.names(model))
    print(f"{kind:>10} {res.delta_star:>9.4f} {names:>9}  {res.units}")

print()
print("critical points all sit exactly on the feasible boundary:")
for kind in ("ellipsoid", "box", "l1", "l2", "linf"):
    res = flexibility_index(model, UncertaintySetSpec(kind))
    print(f"  {kind:>10}: theta* = ({res.theta_star[0]:8.4f}, {res.theta_star[1]:8.4f})"
          f"   psi(theta*) = {psi(model, res.theta_star).u:+.2e}")
