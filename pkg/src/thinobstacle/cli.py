"""Command-line surface: solve, exact, audit, frequency, classify, blowup,
selftest.

Exit codes: 0 success, 1 configuration error, 2 solver nonconvergence,
3 audit or invariant failure.  With --json every outcome is also printed
as a machine-readable JSON object on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import load_config
from .coeffs import deskew_frame
from .errors import ConfigError, InsufficientSamples, ThinObstacleError
from .exact import exact_solution_field
from .fb import (
    classify,
    coincidence_set,
    fit_regular_blowup,
    fit_singular_blowup,
    free_boundary,
    phi_kappa,
    phi_rescale,
)
from .fields import DeskewedField, EvenPart
from .functionals import (
    FunctionalConstants,
    export_profile_csv,
    frequency_at_point,
    profile,
)
from .grid import Grid, read_sgf1, write_sgf1
from .presets import coefficient_preset
from .quadrature import change_of_variables_audit, valid_radius
from .solver import almost_min_audit, brute_force_lcp, solve_psor
from .symmetry import counterexample_demo, quasisymmetry_constant, symmetrize

SCHEMA_VERSION = 1


def _jsonable(obj):
    """Recursively convert to JSON-serializable values at full precision
    (floats round-trip through a 17-significant-digit format)."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj if isinstance(obj, (str, type(None))) else str(obj)


def _emit(report: dict, args) -> None:
    report = dict(report)
    report["schema_version"] = SCHEMA_VERSION
    report["version"] = __version__
    if not getattr(args, "deterministic", False):
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    if getattr(args, "json", False):
        print(text)
    out = getattr(args, "report", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _parse_point(spec: str) -> np.ndarray:
    return np.array([float(v) for v in spec.split(",")])


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    problem = cfg.problem()
    sol = solve_psor(problem, **cfg.solver_kwargs())
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    field_path = os.path.join(outdir, "solution.sgf1")
    write_sgf1(field_path, sol.field)
    comp = sol.complementarity
    report = {
        "command": "solve",
        "problem": problem.name,
        "n": problem.grid.n, "m": problem.grid.m,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "final_update": sol.final_update,
        "field": field_path,
        "complementarity": {
            "active_nodes": int((comp["value"] <= comp.get("eps", 0.0)
                                 + 10 * sol.tol * max(sol.scale(), 1.0)).sum()),
            "thin_nodes": len(comp["value"]),
            "max_violation_value": comp["max_violation_value"],
            "max_violation_flux": comp["max_violation_flux"],
            "max_product": comp["max_product"],
            "ok": comp["ok"],
        },
    }
    _emit(report, args)
    return 0 if sol.converged else 2


def cmd_exact(args) -> int:
    grid = Grid(args.n, args.m)
    params = {}
    if args.nu:
        params["nu"] = _parse_point(args.nu)
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    if args.x0:
        params["x0"] = _parse_point(args.x0)
    if args.name:
        params["name"] = args.name
    if args.A:
        params["A"] = coefficient_preset(args.A, args.n)(np.zeros(args.n))
    fld = exact_solution_field(args.kind, grid, **params)
    out = args.output or f"{args.kind}.sgf1"
    write_sgf1(out, fld)
    _emit({"command": "exact", "kind": args.kind, "field": out,
           "n": args.n, "m": args.m, "scale": fld.scale()}, args)
    return 0


def cmd_audit(args) -> int:
    cfg = load_config(args.config)
    fld = read_sgf1(args.field)
    A = cfg.coefficients()
    if A.n != fld.grid.n:
        raise ConfigError("field dimension does not match config")
    rng = np.random.default_rng(cfg.seed)
    n = fld.grid.n

    cov, worst = [], 0.0
    for _ in range(int(cfg.get("analysis.audit_samples", 8) or 8)):
        x0 = rng.uniform(-0.4, 0.4, size=n)
        frame = deskew_frame(A, x0)
        r = rng.uniform(0.1, 0.8) * valid_radius(frame)
        res = change_of_variables_audit(fld, frame, r, mc_samples=100_000,
                                        rng=rng)
        entry = {"x0": x0, "r": r,
                 "mass": res["mass"][2], "energy": res["energy"][2],
                 "boundary": res["boundary"][2]}
        worst = max(worst, entry["mass"], entry["energy"], entry["boundary"])
        cov.append(entry)

    centers = []
    for _ in range(4):
        x0 = np.zeros(n)
        x0[: n - 1] = rng.uniform(-0.3, 0.3, size=n - 1)
        frame = deskew_frame(A, x0)
        centers.append((x0, 0.5 * valid_radius(frame)))
    qs = quasisymmetry_constant(fld, A, centers)

    x0 = np.zeros(n)
    frame = deskew_frame(A, x0)
    r_am = 0.45 * valid_radius(frame)
    am = almost_min_audit(fld, frame, r_am)

    ok = worst <= 1e-2
    report = {
        "command": "audit",
        "change_of_variables": cov,
        "worst_change_of_variables": worst,
        "quasisymmetry_Q": qs["Q"],
        "almost_min": {"r": r_am, "ratio": am["ratio"],
                       "excess": am["excess"]},
        "counterexample": counterexample_demo(),
        "ok": ok,
    }
    _emit(report, args)
    return 0 if ok else 3


def cmd_frequency(args) -> int:
    fld = read_sgf1(args.field)
    n = fld.grid.n
    A = coefficient_preset(args.A, n)
    x0 = np.zeros(n)
    x0[: len(_parse_point(args.at))] = _parse_point(args.at)
    frame = deskew_frame(A, x0)
    pair = symmetrize(fld, frame)
    consts = FunctionalConstants(kappa=1.5, n=n, kappa0=args.kappa0,
                                 alpha=args.alpha, M=args.gauge_M)
    h = fld.grid.h
    r_lo = args.r_lo or 4.0 * h
    r_hi = args.r_hi or 0.95 * valid_radius(frame)
    if r_hi <= r_lo:
        raise InsufficientSamples(
            f"empty radius window ({r_lo:g}, {r_hi:g}) at {x0}")
    fp, wp = profile(pair.deskewed_even, frame, consts, r_lo, r_hi, h=h,
                     Lam=A.Lam, scale=fld.scale())
    kappa, conf = frequency_at_point(fp)
    csv_path = args.csv or "frequency.csv"
    export_profile_csv(csv_path, fp, wp)
    _emit({"command": "frequency", "x0": x0, "kappa": kappa,
           "confidence": conf, "trusted_window": fp.trusted_window,
           "csv": csv_path}, args)
    return 0


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    fld = read_sgf1(args.field)
    A = cfg.coefficients()
    ccfg = cfg.classify_config()
    cs = coincidence_set(fld)
    points = free_boundary(cs)
    margin = float(cfg.get("analysis.margin", 0.5))
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    entries = []
    for k, p in enumerate(points):
        if np.abs(p.location[:-1]).max() > margin:
            continue
        pc = classify(fld, A, p.location, config=ccfg, cs=cs)
        csv_path = None
        if pc.profile is not None:
            csv_path = os.path.join(outdir, f"point_{k:03d}.csv")
            export_profile_csv(csv_path, pc.profile, pc.weiss)
        detail = {key: val for key, val in pc.detail.items()
                  if key not in ("fit",)}
        entries.append({"x0": pc.x0, "kappa": pc.kappa,
                        "confidence": pc.confidence, "verdict": pc.verdict,
                        "detail": detail, "profile_csv_path": csv_path})
    report = {"command": "classify", "points": entries,
              "free_boundary_count": len(points),
              "active_nodes": cs.active_count}
    _emit(report, args)
    return 0


def cmd_blowup(args) -> int:
    fld = read_sgf1(args.field)
    n = fld.grid.n
    A = coefficient_preset(args.A, n)
    x0 = np.zeros(n)
    x0[: len(_parse_point(args.at))] = _parse_point(args.at)
    frame = deskew_frame(A, x0)
    ustar = EvenPart(DeskewedField(fld, frame))
    model = args.model
    if model == "regular":
        kappa = 1.5
    elif model.startswith("singular:"):
        kappa = 2.0 * int(model.split(":", 1)[1])
    else:
        raise ConfigError(f"unknown blowup model {model!r}")
    consts = FunctionalConstants(kappa=kappa, n=n, M=args.gauge_M,
                                 alpha=args.alpha)
    rescaled = phi_rescale(ustar, consts, args.t)
    if model == "regular":
        fit = fit_regular_blowup(rescaled, n=n)
    else:
        fit = fit_singular_blowup(rescaled, int(kappa / 2), n=n)
    params = {k: v for k, v in fit.params.items() if k != "poly"}
    # undo the gauge factor phi(t)/t^kappa so amplitudes and coefficients
    # are reported in the natural t^kappa normalization
    gauge = phi_kappa(args.t, consts) / args.t**kappa
    for key in ("amplitude", "coefficients"):
        if key in params:
            params[key] = params[key] * gauge
    _emit({"command": "blowup", "model": model, "t": args.t,
           "residual": fit.residual, "norm": fit.norm, "params": params},
          args)
    return 0


def cmd_selftest(args) -> int:
    """Brute-force-oracle and exact-invariant suite."""
    from .coeffs import constant_field
    from .functionals import almgren, weiss
    from .solver import SignoriniProblem

    failures = []
    rng = np.random.default_rng(7)
    for k in range(3):
        name = ["identity", "diag4", "var_diag:1"][k]
        A = coefficient_preset(name, 2)
        g = Grid(2, 9)
        shift = rng.uniform(-0.2, 0.2)
        bdata = lambda x, s=shift: np.asarray(x)[:, 0] - s
        prob = SignoriniProblem(A, g, bdata)
        sol = solve_psor(prob, tol=1e-13)
        ref = brute_force_lcp(prob, op=sol.op)
        err = float(np.abs(sol.field.values - ref.values).max())
        if err > 1e-8:
            failures.append(f"oracle mismatch {name}: {err:.3e}")

    fr = deskew_frame(constant_field(np.eye(2)), np.zeros(2))
    from .exact import HalfSpaceSolution
    hs = HalfSpaceSolution()
    N = almgren(hs, fr, 0.3)
    if abs(N - 1.5) > 0.02:
        failures.append(f"frequency of the 3/2 profile: {N}")
    W = weiss(hs, fr, FunctionalConstants(kappa=1.5, n=2, M=0.0), 0.3)
    if abs(W) > 1e-6:
        failures.append(f"Weiss identity violated: {W}")

    demo = counterexample_demo()
    d0 = demo["deltas"][0]
    if d0["competitor_energy"] != 0.0 or \
            abs(d0["ustar_energy_half_interval"] - 0.1**3 / 12.0) > 1e-12:
        failures.append("counterexample energies off")

    _emit({"command": "selftest", "failures": failures,
           "ok": not failures}, args)
    if failures and not getattr(args, "json", False):
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
    return 0 if not failures else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thinobstacle")
    ap.add_argument("--json", action="store_true",
                    help="print a JSON report on stdout")
    ap.add_argument("--deterministic", action="store_true",
                    help="omit timestamps from reports")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a configured problem")
    p.add_argument("config")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="sample an exact solution to SGF1")
    p.add_argument("kind", choices=["regular", "super", "polynomial"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=129)
    p.add_argument("--nu")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--x0")
    p.add_argument("--name", help="named polynomial")
    p.add_argument("--A", help="constant coefficient preset to skew with")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("audit", help="run integral and minimality audits")
    p.add_argument("field")
    p.add_argument("config")
    p.add_argument("--report")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("frequency", help="frequency profile at a point")
    p.add_argument("field")
    p.add_argument("--at", required=True, help="thin-space coordinates")
    p.add_argument("--A", default="identity")
    p.add_argument("--kappa0", type=float, default=4.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gauge-M", type=float, default=0.005, dest="gauge_M")
    p.add_argument("--r-lo", type=float, dest="r_lo")
    p.add_argument("--r-hi", type=float, dest="r_hi")
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_frequency)

    p = sub.add_parser("classify", help="classify all free-boundary points")
    p.add_argument("field")
    p.add_argument("config")
    p.add_argument("--report")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("blowup", help="fit a blowup model at a point")
    p.add_argument("field")
    p.add_argument("--at", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--model", required=True,
                   help="regular or singular:m")
    p.add_argument("--A", default="identity")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gauge-M", type=float, default=0.005, dest="gauge_M")
    p.add_argument("--report")
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("selftest", help="oracle and invariant suite")
    p.add_argument("--report")
    p.set_defaults(func=cmd_selftest)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        msg = {"error": "config", "message": str(exc)}
        if args.json:
            print(json.dumps(msg))
        else:
            print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        if args.json:
            print(json.dumps({"error": "config", "message": str(exc)}))
        else:
            print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ThinObstacleError as exc:
        msg = {"error": type(exc).__name__, "message": str(exc)}
        if args.json:
            print(json.dumps(msg))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
