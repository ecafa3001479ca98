"""Command-line interface.

Subcommands expose each analysis with machine-readable output:

- ``psi``       feasibility function at one parameter point
- ``index``     flexibility index for a chosen uncertainty-set family
- ``sf``        Monte Carlo stochastic-flexibility estimate
- ``verify``    geometry checks plus Monte Carlo validation of an
                ellipsoidal index result
- ``boundary``  CSV plot data (feasible boundary, optimal ellipse,
                optimal hyperbox corners) for two-parameter models

Exit codes: 0 success/feasible, 1 usage, 2 input or model error,
3 infeasible signal, 4 verification failure.  Human-readable summaries go
to stdout, JSON to ``--json``, diagnostics to stderr.  Randomized commands
require an explicit ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, flexindex, model as model_mod, montecarlo
from .errors import FlexkitError, NoCandidatesError
from .model import UncertaintySetSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4

_SET_CHOICES = ("ellipsoid", "box", "l1", "l2", "linf")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load(path):
    try:
        return model_mod.load_model(path)
    except OSError as exc:
        print(f"error: cannot read model: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    except FlexkitError as exc:
        print(f"error: invalid model: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _emit(report: dict, json_path: str | None):
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")


def _report(command: str, mdl, results: dict, diagnostics: dict | None = None) -> dict:
    return {
        "command": command,
        "model": mdl.name,
        "version": __version__,
        "results": results,
        "diagnostics": diagnostics or {},
    }


def _parse_theta(text: str, n_theta: int) -> np.ndarray:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        print(f"error: cannot parse --theta {text!r}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if len(values) != n_theta:
        print(f"error: --theta needs {n_theta} components, got {len(values)}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return np.asarray(values)


def _cmd_psi(args) -> int:
    mdl = _load(args.model)
    theta = _parse_theta(args.theta, mdl.n_theta)
    try:
        res = flexindex.psi(mdl, theta)
    except FlexkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    names = [mdl.constraints[j].name for j in res.active_constraints]
    results = {
        "theta": theta.tolist(),
        "u": res.u,
        "z_star": res.z_star.tolist(),
        "active_constraints": list(res.active_constraints),
        "active_names": names,
        "feasible": bool(res.u <= 0.0),
    }
    report = _report("psi", mdl, results)
    _emit(report, args.json)
    state = "feasible" if res.u <= 0.0 else "infeasible"
    print(f"psi = {res.u:.9g} ({state}); active: {', '.join(names)}")
    if mdl.n_z:
        print(f"recourse z* = {res.z_star.tolist()}")
    return EXIT_OK if res.u <= 0.0 else EXIT_INFEASIBLE


def _candidate_rows(result) -> list[dict]:
    rows = []
    for rep in result.candidates:
        rows.append(
            {
                "indices": list(rep.indices),
                "names": list(rep.names),
                "status": rep.status,
                "delta": rep.delta,
                "note": rep.note,
            }
        )
    return rows


def _cmd_index(args) -> int:
    mdl = _load(args.model)
    spec = UncertaintySetSpec(args.set)
    try:
        res = flexindex.flexibility_index(mdl, spec)
    except (NoCandidatesError, FlexkitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if res.not_interior:
        print(
            f"error: nominal point is not strictly feasible (psi = {res.psi_nominal:.6g}); "
            "index is 0",
            file=sys.stderr,
        )
        results = {"set": args.set, "delta_star": 0.0, "not_interior": True,
                   "psi_nominal": res.psi_nominal}
        _emit(_report("index", mdl, results), args.json)
        return EXIT_INPUT
    results = {
        "set": args.set,
        "delta_star": res.delta_star,
        "units": res.units,
        "theta_star": res.theta_star.tolist(),
        "z_star": res.z_star.tolist(),
        "active_set": list(res.active_set.indices),
        "active_names": list(res.active_set.names(mdl)),
        "alpha_star": res.alpha_star,
        "ties": [list(t) for t in res.ties],
    }
    diagnostics = {"candidates": _candidate_rows(res), "elapsed_s": res.elapsed}
    _emit(_report("index", mdl, results, diagnostics), args.json)
    print(f"flexibility index ({args.set}): delta* = {res.delta_star:.6g}  [{res.units}]")
    print(f"critical point theta* = {res.theta_star.tolist()}")
    print(f"limiting constraints: {', '.join(res.active_set.names(mdl))}")
    if res.alpha_star is not None:
        print(f"confidence level alpha* = {100.0 * res.alpha_star:.2f}%")
    print(f"candidates: {len(res.candidates)} evaluated", file=sys.stderr)
    return EXIT_OK


def _cmd_sf(args) -> int:
    if args.samples < 1:
        print("error: --samples must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    mdl = _load(args.model)
    try:
        est = montecarlo.estimate_sf(mdl, args.samples, args.seed)
    except FlexkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    results = {
        "estimate": est.estimate,
        "stderr": est.stderr,
        "ci95": list(est.ci95),
        "n_samples": est.n_samples,
        "seed": est.seed,
        "elapsed_s": est.elapsed,
    }
    _emit(_report("sf", mdl, results), args.json)
    print(
        f"SF = {est.estimate:.4f} +/- {est.stderr:.4f} "
        f"(95% CI {est.ci95[0]:.4f}..{est.ci95[1]:.4f}, n = {est.n_samples})"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    mdl = _load(args.model)
    if args.set != "ellipsoid":
        print("error: verification is defined for the ellipsoid set", file=sys.stderr)
        return EXIT_USAGE
    try:
        res = flexindex.flexibility_index(mdl, UncertaintySetSpec("ellipsoid"))
    except (NoCandidatesError, FlexkitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if res.not_interior:
        print("error: nominal point is not strictly feasible", file=sys.stderr)
        return EXIT_INPUT
    rep = flexindex.verify_solution(mdl, res, args.probes, args.seed)
    alpha_mc = montecarlo.estimate_alpha(mdl, res.delta_star, args.alpha_samples, args.seed)
    sf_mc = montecarlo.estimate_sf(mdl, args.sf_samples, args.seed)
    bound_ok = alpha_mc.estimate <= sf_mc.estimate + 3.0 * (alpha_mc.stderr + sf_mc.stderr)

    checks = [
        ("containment: probes inside ellipsoid are feasible",
         True if rep.containment_ok is None else rep.containment_ok),
        ("critical point on feasible boundary (psi = 0)", rep.boundary_feasible_ok),
        ("critical point on ellipsoid boundary", rep.boundary_set_ok),
        ("alpha* lower-bounds SF at Monte Carlo resolution", bound_ok),
    ]
    results = {
        "delta_star": res.delta_star,
        "alpha_star": res.alpha_star,
        "alpha_mc": alpha_mc.estimate,
        "sf_mc": sf_mc.estimate,
        "worst_probe_psi": rep.worst_probe_psi if np.isfinite(rep.worst_probe_psi) else None,
        "psi_at_theta_star": rep.psi_at_theta_star,
        "set_measure_gap": rep.set_measure_gap,
        "checks": {name: bool(ok) for name, ok in checks},
    }
    _emit(_report("verify", mdl, results), args.json)
    print(f"delta* = {res.delta_star:.6g}, alpha* = {res.alpha_star:.4f}")
    print(f"alpha-MC = {alpha_mc.estimate:.4f} ({alpha_mc.n_samples} draws), "
          f"SF-MC = {sf_mc.estimate:.4f} ({sf_mc.n_samples} draws)")
    all_ok = True
    for name, ok in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        all_ok = all_ok and ok
    return EXIT_OK if all_ok else EXIT_VERIFY


def _cmd_boundary(args) -> int:
    mdl = _load(args.model)
    if mdl.n_theta != 2:
        print(f"error: boundary plotting needs n_theta = 2, model has {mdl.n_theta}",
              file=sys.stderr)
        return EXIT_INPUT
    try:
        blocks = _boundary_blocks(mdl, args.resolution)
    except FlexkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("theta1,theta2\n")
        for name, pts in blocks:
            fh.write(f"# block: {name}\n")
            for p in pts:
                fh.write(f"{p[0]:.12g},{p[1]:.12g}\n")
    print(f"wrote {args.out} ({sum(len(p) for _, p in blocks)} points in {len(blocks)} blocks)")
    return EXIT_OK


def _aggregated_halfplanes(mdl) -> list[tuple[np.ndarray, float]]:
    """Halfplane description g @ theta <= h of the feasible region, obtained
    by weighting constraints with each candidate's multipliers (the recourse
    cancels by construction)."""
    from .activeset import enumerate_candidates

    rows = []
    for cand in enumerate_candidates(mdl):
        g = mdl.a_theta_matrix[list(cand.indices)].T @ cand.lam
        h = -float(cand.lam @ mdl.c_vector[list(cand.indices)])
        norm = float(np.linalg.norm(g))
        if norm > 1e-12:
            rows.append((g / norm, h / norm))
    return rows


def _clip_polygon(poly: list[np.ndarray], g: np.ndarray, h: float) -> list[np.ndarray]:
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        pin, qin = g @ p <= h + 1e-12, g @ q <= h + 1e-12
        if pin:
            out.append(p)
        if pin != qin:
            t = (h - g @ p) / (g @ (q - p))
            out.append(p + t * (q - p))
    return out


def _boundary_blocks(mdl, resolution: int):
    spec = UncertaintySetSpec("ellipsoid")
    res = flexindex.flexibility_index(mdl, spec)
    chol = mdl.uncertainty.chol
    center = mdl.theta_bar

    # feasible-region polygon, window-clipped for unbounded directions
    reach = float(np.sqrt(max(res.delta_star, 1.0)) * np.max(np.abs(chol))) + 1.0
    if mdl.hyperbox is not None:
        reach = max(reach, float(np.max(mdl.hyperbox.delta_plus)), float(np.max(mdl.hyperbox.delta_minus)))
    half = 3.0 * reach
    window = [
        center + np.array([-half, -half]),
        center + np.array([half, -half]),
        center + np.array([half, half]),
        center + np.array([-half, half]),
    ]
    poly = window
    for g, h in _aggregated_halfplanes(mdl):
        poly = _clip_polygon(poly, g, h)
        if not poly:
            break
    boundary = poly + poly[:1] if poly else []

    # optimal ellipse, exact points of the quadratic level set
    t = np.linspace(0.0, 2.0 * np.pi, max(int(resolution), 1), endpoint=False)
    circle = np.vstack([np.cos(t), np.sin(t)])
    ellipse = (center[:, None] + np.sqrt(res.delta_star) * (chol @ circle)).T

    blocks = [
        ("feasible_boundary", [np.asarray(p) for p in boundary]),
        ("ellipse", list(ellipse)),
    ]
    if mdl.hyperbox is not None:
        box_res = flexindex.flexibility_index(mdl, UncertaintySetSpec("box"))
        s = box_res.delta_star
        dm, dp = mdl.hyperbox.delta_minus, mdl.hyperbox.delta_plus
        corners = [
            center + np.array([-s * dm[0], -s * dm[1]]),
            center + np.array([s * dp[0], -s * dm[1]]),
            center + np.array([s * dp[0], s * dp[1]]),
            center + np.array([-s * dm[0], s * dp[1]]),
        ]
        blocks.append(("hyperbox_corners", corners))
    return blocks


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexkit", description="Flexibility analysis of linear systems under uncertainty")
    parser.add_argument("--version", action="version", version=f"flexkit {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("psi", help="feasibility function at a parameter point")
    p.add_argument("model")
    p.add_argument("--theta", required=True, help="comma-separated parameter values")
    p.add_argument("--json", default=None, help="write the full report to this path")
    p.set_defaults(fn=_cmd_psi)

    p = sub.add_parser("index", help="flexibility index")
    p.add_argument("model")
    p.add_argument("--set", required=True, choices=_SET_CHOICES)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=_cmd_index)

    p = sub.add_parser("sf", help="Monte Carlo stochastic flexibility")
    p.add_argument("model")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=_cmd_sf)

    p = sub.add_parser("verify", help="audit an ellipsoidal index result")
    p.add_argument("model")
    p.add_argument("--set", default="ellipsoid", choices=("ellipsoid",))
    p.add_argument("--probes", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha-samples", type=int, default=10_000)
    p.add_argument("--sf-samples", type=int, default=10_000)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("boundary", help="CSV plot data for two-parameter models")
    p.add_argument("model")
    p.add_argument("--resolution", type=int, default=360)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_boundary)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        code = args.fn(args)
    except SystemExit as exc:
        if exc.code == 0:  # --version and --help exit cleanly
            raise
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return code


if __name__ == "__main__":
    raise SystemExit(main())
