"""End-to-end acceptance checks with pinned tolerances.

The expensive solved ensembles come from session fixtures in conftest.py;
each test states its tolerance inline.
"""

import time
import warnings

import numpy as np
import pytest

from conftest import ensemble_params
from thinobstacle.coeffs import constant_field, deskew_frame
from thinobstacle.errors import NotMMatrix
from thinobstacle.exact import exact_solution, exact_solution_field
from thinobstacle.fb import (
    classify,
    coincidence_set,
    free_boundary,
    regular_set_graph,
)
from thinobstacle.functionals import (
    FunctionalConstants,
    frequency_at_point,
    profile,
    weiss,
)
from thinobstacle.grid import Grid
from thinobstacle.presets import boundary_data, coefficient_preset, drift_spec
from thinobstacle.quadrature import (
    change_of_variables_audit,
    ellipsoid_energy,
    valid_radius,
)
from thinobstacle.solver import (
    SignoriniProblem,
    almost_min_audit,
    brute_force_lcp,
    solve_psor,
)
from thinobstacle.symmetry import counterexample_demo, quasisymmetry_constant


@pytest.fixture(scope="module")
def classified_ensemble(ensemble):
    """Classification of every ensemble free-boundary point."""
    out = []
    for member in ensemble:
        for p in member["points"]:
            pc = classify(member["solution"], member["A"], p,
                          cs=member["cs"])
            out.append({"seed": member["seed"], "point": p, "pc": pc,
                        "scale": member["solution"].scale()})
    return out


# ---------------------------------------------------------- solver oracle

def test_psor_matches_brute_force_on_seeded_small_problems():
    # ten 9x9 problems across coefficient presets, with and without drift:
    # max node difference <= 1e-8, total runtime well under 30 s
    cases = [
        ("identity", None), ("diag4", None), ("offdiag", None),
        ("var_iso:1", None), ("var_diag:2", None), ("var_full:3", None),
        ("identity", "constant:1,0"), ("diag4", "constant:0.5,-0.5"),
        ("var_diag:4", "constant:-1,0.3"), ("var_iso:5", "constant:0,1"),
    ]
    t0 = time.time()
    for k, (preset, drift) in enumerate(cases):
        A = coefficient_preset(preset, 2)
        bd = boundary_data("humps", 2, dimple=1.0 + 0.1 * k,
                           dimple_center=0.05 * (k - 5))
        prob = SignoriniProblem(A, Grid(2, 9), bd,
                                drift=drift_spec(drift, 2), drift_p=10.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotMMatrix)
            sol = solve_psor(prob, tol=1e-13)
            ref = brute_force_lcp(prob, op=sol.op)
        err = float(np.abs(sol.field.values - ref.values).max())
        assert err <= 1e-8, (preset, drift, err)
    assert time.time() - t0 < 30.0


# ------------------------------------------------------- grid convergence

def test_grid_convergence_against_exact_regular():
    exact = exact_solution("regular", 2)
    ms, errs = [65, 129, 257], []
    t0 = time.time()
    for m in ms:
        prob = SignoriniProblem(coefficient_preset("identity", 2),
                                Grid(2, m), exact)
        sol = solve_psor(prob, tol=1e-11, relax=1.95)
        assert sol.converged
        err = np.abs(sol.field.values.ravel() - exact(prob.grid.nodes()))
        errs.append(err.max())
    slope = -np.polyfit(np.log(ms), np.log(errs), 1)[0]
    assert slope >= 0.9, errs
    assert time.time() - t0 < 120.0


# ----------------------------------------------------- frequency recovery

def test_frequency_recovery_2d(exact_regular_257, exact_singular_257,
                               exact_super_257):
    fr = deskew_frame(constant_field(np.eye(2)), np.zeros(2))
    t0 = time.time()
    for fld, kappa in [(exact_regular_257, 1.5), (exact_singular_257, 2.0),
                       (exact_super_257, 3.5)]:
        c = FunctionalConstants(kappa=kappa, n=2, M=0.005)
        fp, _ = profile(fld, fr, c, 0.05, 0.7, h=fld.grid.h,
                        scale=fld.scale())
        got, _ = frequency_at_point(fp)
        assert abs(got - kappa) <= 0.05, (kappa, got)
    assert time.time() - t0 < 120.0


def test_frequency_recovery_3d():
    fr = deskew_frame(constant_field(np.eye(3)), np.zeros(3))
    g = Grid(3, 97)
    cases = [("regular", {}, 1.5),
             ("polynomial", {"name": "x1sq_minus_xnsq"}, 2.0),
             ("super", {}, 3.5)]
    for kind, kw, kappa in cases:
        fld = exact_solution_field(kind, g, **kw)
        c = FunctionalConstants(kappa=kappa, n=3, M=0.005)
        # steeper profiles need a larger smallest radius: interpolation
        # error grows with kappa near the center at this resolution
        r_lo = 0.1 if kappa < 3.0 else 0.15
        fp, _ = profile(fld, fr, c, r_lo, 0.7, h=g.h, scale=fld.scale())
        got, _ = frequency_at_point(fp)
        assert abs(got - kappa) <= 0.08, (kind, got)


# ----------------------------------------------------------- Weiss identity

def test_weiss_identity_for_homogeneous_solutions():
    # a = b = 0 override: |W_kappa(r)| <= 1e-2 * energy scale of the same
    # integral, for kappa-homogeneous closed forms
    fr = deskew_frame(constant_field(np.eye(2)), np.zeros(2))
    cases = [(1.5, exact_solution("regular", 2)),
             (3.5, exact_solution("super", 2)),
             (2.0, exact_solution("polynomial", 2, name="x1sq_minus_xnsq"))]
    for kappa, v in cases:
        c = FunctionalConstants(kappa=kappa, n=2, M=0.0)
        for r in (0.1, 0.3, 0.6):
            E = ellipsoid_energy(v, fr, r)
            scale = E / r ** (2.0 * kappa)  # the prefactor-weighted energy
            W = weiss(v, fr, c, r)
            assert abs(W) <= 1e-2 * scale, (kappa, r, W, scale)


# ------------------------------------------------------- solved ensembles

def test_truncated_frequency_monotone_on_ensemble(classified_ensemble):
    # >= 10 audited free-boundary points; Nhat nondecreasing within
    # 5e-3 per ladder step on the trusted window, zero violations
    assert len(classified_ensemble) >= 10
    violations = 0
    for entry in classified_ensemble:
        fp = entry["pc"].profile
        assert fp is not None
        nhat = fp.Nhat[fp.trusted]
        steps = np.diff(nhat)
        if steps.min(initial=0.0) < -5e-3:
            violations += 1
    assert violations == 0


def test_weiss_lower_bound_on_ensemble(classified_ensemble):
    # W_{3/2}(r) >= -1e-3 * energy scale at every audited point and radius
    for entry in classified_ensemble:
        wp = entry["pc"].weiss
        scale = entry["scale"] ** 2
        Wmin = float(wp.W[wp.trusted].min())
        assert Wmin >= -1e-3 * scale, (entry["seed"], Wmin, scale)


def test_frequency_gap_and_classification_rate(classified_ensemble):
    kappas = np.array([e["pc"].kappa for e in classified_ensemble])
    verdicts = [e["pc"].verdict for e in classified_ensemble]
    decided = [v for v in verdicts if v != "Undetermined"]
    # no decided point reports a frequency inside the forbidden gap
    for k, v in zip(kappas, verdicts):
        if v != "Undetermined":
            assert not (1.65 < k < 1.85), (k, v)
    assert len(decided) >= 0.9 * len(classified_ensemble)


# -------------------------------------------------- regular set in three-d

def test_regular_set_recovery_3d():
    t0 = time.time()
    A = coefficient_preset("diag4", 3)
    g = Grid(3, 97)
    nu = [0.6, 0.8]
    fld = exact_solution_field("regular", g, nu=nu,
                               A=np.diag([4.0, 1.0, 1.0]))
    cs = coincidence_set(fld)
    pts = free_boundary(cs)
    assert len(pts) >= 8
    pts = sorted(pts, key=lambda p: np.linalg.norm(p.location[:2]))[:8]

    # true conormal normal: abar = diag(2,1,1), nu_A ~ (0.3, 0.8)
    true_nuA = np.array([0.3, 0.8]) / np.linalg.norm([0.3, 0.8])
    classified = []
    for p in pts:
        pc = classify(fld, A, p, cs=cs)
        assert pc.verdict == "Regular", (p.location, pc.verdict, pc.kappa)
        ang = np.degrees(np.arccos(np.clip(
            abs(np.dot(pc.detail["nu_A"], true_nuA)), -1.0, 1.0)))
        assert ang <= 5.0, (p.location, ang)
        classified.append(pc)

    graph = regular_set_graph(classified)
    assert graph["max_residual"] <= 2.0 * g.h
    ang = np.degrees(np.arccos(np.clip(
        abs(np.dot(graph["mean_nu_A"], true_nuA)), -1.0, 1.0)))
    assert ang <= 5.0
    assert time.time() - t0 < 7200.0


# --------------------------------------------------------- singular point

def test_singular_point_classification(exact_singular_257):
    A = coefficient_preset("identity", 2)
    cs = coincidence_set(exact_singular_257)
    out = classify(exact_singular_257, A, [0.0, 0.0], cs=cs)
    assert out.verdict == "Singular"
    assert out.detail["m"] == 1
    assert out.detail["d"] == 0
    coefs = {tuple(e): c for e, c in zip(out.detail["exponents"],
                                         out.detail["coefficients"])}
    assert abs(coefs[(2, 0)] - 1.0) <= 0.05
    assert abs(coefs[(0, 2)] + 1.0) <= 0.05
    assert out.detail["thin_density"] <= 0.15


# ------------------------------------------------------ drift almost-min

def test_almost_minimizer_with_drift():
    # identity coefficients, double-well data, unit drift with p = 8: the
    # audit excess decays toward 0+ with log-log slope >= 0.6 over a
    # radius decade and the ratio never drops below 1 - 2e-2
    params = ensemble_params(1)
    prob = SignoriniProblem(
        coefficient_preset("identity", 2), Grid(2, 257),
        boundary_data("wells", 2, **params),
        drift=drift_spec("constant:1,0", 2), drift_p=8.0)
    sol = solve_psor(prob, tol=1e-10, relax=1.95)
    assert sol.converged

    fr = deskew_frame(prob.A, np.zeros(2))
    radii = np.geomspace(0.08, 0.8, 9)
    ratios = np.array([almost_min_audit(sol.field, fr, r)["ratio"]
                       for r in radii])
    assert ratios.min() >= 1.0 - 2e-2
    excess = ratios - 1.0
    assert (excess > 0.0).all()
    slope = np.polyfit(np.log(radii), np.log(excess), 1)[0]
    assert slope >= 0.6, (slope, ratios)


# -------------------------------------------------- change of variables

def test_change_of_variables_residuals():
    # 20 random (x0, r) pairs over presets including full off-diagonal
    # coefficients: MC-vs-quadrature relative residuals <= 1e-2
    rng = np.random.default_rng(11)
    presets = ["identity", "diag4", "offdiag", "var_full:2"]
    v = exact_solution("regular", 2, nu=[1.0])
    for k in range(20):
        A = coefficient_preset(presets[k % len(presets)], 2)
        x0 = rng.uniform(-0.3, 0.3, size=2)
        frame = deskew_frame(A, x0)
        r = rng.uniform(0.15, 0.6) * valid_radius(frame)
        res = change_of_variables_audit(v, frame, r, mc_samples=200_000,
                                        rng=rng)
        for key in ("energy", "mass", "boundary"):
            assert res[key][2] <= 1e-2, (k, key, res[key])


# ----------------------------------------------------------- symmetry Q

def test_quasisymmetry_of_even_diagonal_problem():
    # diagonal coefficients with even boundary data: the solved field is
    # even across the plane, so Q = 1 up to solver tolerance
    prob = SignoriniProblem(
        coefficient_preset("diag4", 2), Grid(2, 129),
        boundary_data("humps", 2, dimple=1.2))
    sol = solve_psor(prob, tol=1e-12, relax=1.9)
    A = prob.A
    samples = []
    for t in (-0.2, 0.0, 0.15):
        x0 = np.array([t, 0.0])
        samples.append((x0, 0.5 * valid_radius(deskew_frame(A, x0))))
    out = quasisymmetry_constant(sol.field, A, samples)
    assert out["Q"] <= 1.0 + 1e-6


def test_counterexample_energies():
    out = counterexample_demo(deltas=(0.1,))
    d = out["deltas"][0]
    assert d["competitor_energy"] == 0.0
    assert abs(d["ustar_energy_half_interval"] - 0.1**3 / 12.0) <= 1e-12
