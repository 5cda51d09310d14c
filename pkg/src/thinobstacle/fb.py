"""Free-boundary extraction, rescalings, blowup fits and classification.

Works on the thin plane of a solved (or exact, sampled) field: extracts the
coincidence set and the free boundary Gamma, measures thin densities,
rescales the deskewed even part by the Almgren normalization or by
phi_kappa(t) = exp(-kappa b t^alpha / alpha) t^kappa, fits the 3/2
half-space model or an even harmonic polynomial blowup, and classifies
points as Regular / Singular / Undetermined from the extrapolated
frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _dcfield

import numpy as np

from .coeffs import CoefficientField, Frame, deskew_frame
from .errors import (
    DegenerateFit,
    InsufficientSamples,
    NonnegativityViolated,
    RadiusBelowResolution,
    RadiusBeyondTruncationDomain,
    TooFewPoints,
    VanishingBoundaryMass,
)
from .exact import HalfSpaceSolution, PolyField, harmonic_basis
from .fields import DeskewedField, EvenPart, PhiRescaled
from .functionals import (
    FunctionalConstants,
    frequency_at_point,
    profile,
)
from .grid import ScalarField
from .quadrature import (
    ball_rule,
    ellipsoid_boundary_mass,
    sphere_rule,
    valid_radius,
)
from .solver import Solution

__all__ = [
    "CoincidenceSet",
    "FreeBoundaryPoint",
    "PointClassification",
    "BlowupFit",
    "ClassifyConfig",
    "coincidence_set",
    "free_boundary",
    "thin_density",
    "almgren_rescale",
    "phi_rescale",
    "fit_regular_blowup",
    "fit_singular_blowup",
    "classify",
    "conormal_normal",
    "regular_set_graph",
]


@dataclass
class CoincidenceSet:
    """Active mask over the thin-plane grid nodes (U <= eps)."""

    grid: object
    mask: np.ndarray  # shape (m,) * (n-1)
    eps: float
    thin_values: np.ndarray

    @property
    def active_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class FreeBoundaryPoint:
    """Sub-grid crossing estimate on the thin plane."""

    location: np.ndarray  # length n, last component 0
    cell: tuple  # owning thin-grid cell index


@dataclass
class BlowupFit:
    kind: str  # "regular" or "singular"
    t: float
    residual: float
    norm: float
    params: dict


@dataclass
class PointClassification:
    x0: np.ndarray
    kappa: float
    confidence: float
    verdict: str  # "Regular" | "Singular" | "Undetermined"
    detail: dict = _dcfield(default_factory=dict)
    profile: object = None
    weiss: object = None


def coincidence_set(U, eps: float | None = None) -> CoincidenceSet:
    """Active set {U <= eps} on the thin-plane nodes.

    For a Solution the default eps is 10 * solver tolerance * field scale
    (projection makes active nodes exact zeros); for plain fields a scale-
    relative epsilon is used.
    """
    if isinstance(U, Solution):
        fld = U.field
        if eps is None:
            eps = 10.0 * U.tol * max(fld.scale(), 1.0)
    else:
        fld = U
        if eps is None:
            eps = 1e-12 * max(fld.scale(), 1.0)
    tv = fld.thin_values()
    return CoincidenceSet(grid=fld.grid, mask=tv <= eps, eps=float(eps),
                          thin_values=tv)


def free_boundary(cs: CoincidenceSet) -> list[FreeBoundaryPoint]:
    """Crossings of thin-grid edges with one active and one inactive node.

    The crossing along an edge is located by the linear behavior of
    U^{2/3}: a line through the two nearest inactive-side values,
    extrapolated to zero (exact for the 3/2 model); when no second
    inactive node exists the endpoint interpolation of U^{2/3} is used.
    One point is reported per thin-grid cell (crossings averaged).
    """
    g = cs.grid
    n, m, h = g.n, g.m, g.h
    V = np.maximum(cs.thin_values, 0.0)
    W = V ** (2.0 / 3.0)
    mask = cs.mask
    ax = g.axis
    by_cell: dict[tuple, list] = {}

    for d in range(n - 1):
        sl_lo = [slice(None)] * (n - 1)
        sl_hi = [slice(None)] * (n - 1)
        sl_lo[d] = slice(0, m - 1)
        sl_hi[d] = slice(1, m)
        a_lo = mask[tuple(sl_lo)]
        a_hi = mask[tuple(sl_hi)]
        cross = a_lo ^ a_hi
        for idx in np.argwhere(cross):
            lo = tuple(idx)  # multi-index of the low node along axis d
            hi = tuple(idx + (np.arange(n - 1) == d))
            # orient so `act` is the active endpoint
            if a_lo[lo]:
                act, inact, step = lo, hi, 1
            else:
                act, inact, step = hi, lo, -1
            w1 = W[inact]
            nxt = list(inact)
            nxt[d] += step
            frac = None
            if 0 <= nxt[d] < m and not mask[tuple(nxt)]:
                w2 = W[tuple(nxt)]
                slope = (w2 - w1) / h
                if slope > 1e-14:
                    # zero of the line through the two inactive values,
                    # stepping back toward the active side
                    pos = ax[inact[d]] - step * w1 / slope
                    frac = np.clip((pos - ax[min(act[d], inact[d])]) / h,
                                   0.0, 1.0)
            if frac is None:
                w0 = W[act]
                denom = w1 - w0
                t = w0 / denom if denom > 1e-300 else 0.5
                pos = ax[act[d]] + step * h * np.clip(t, 0.0, 1.0)
                frac = np.clip((pos - ax[min(act[d], inact[d])]) / h,
                               0.0, 1.0)
            loc = np.zeros(n)
            for k in range(n - 1):
                loc[k] = ax[idx[k]] if k != d else ax[min(act[d], inact[d])] \
                    + frac * h
            cell = tuple(min(int(i), m - 2) for i in idx)
            by_cell.setdefault(cell, []).append(loc)

    out = []
    for cell, locs in sorted(by_cell.items()):
        out.append(FreeBoundaryPoint(location=np.mean(locs, axis=0),
                                     cell=cell))
    return out


def thin_density(cs: CoincidenceSet, x0, r: float) -> float:
    """Active-node fraction of the thin ball B'_r(x0), node-counting."""
    g = cs.grid
    if r < 3.0 * g.h:
        raise RadiusBelowResolution(f"r={r:g} < 3h={3 * g.h:g}")
    x0 = np.asarray(x0, dtype=float)[: g.n - 1]
    ax = g.axis
    mesh = np.meshgrid(*([ax] * (g.n - 1)), indexing="ij")
    pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
    inside = np.linalg.norm(pts - x0, axis=1) <= r
    total = int(inside.sum())
    if total == 0:
        raise RadiusBelowResolution(f"no thin nodes inside B'_{r:g}({x0})")
    active = int(cs.mask.ravel()[inside].sum())
    return active / total


def almgren_rescale(Ustar, frame: Frame, r: float, sph=None,
                    deskewed: bool = True):
    """Deskewed Almgren rescaling v(y) = u*(r y) / H_r^{1/2} with
    H_r = r^{-(n-1)} int_{dB_r} (u*)^2; normalized so the L^2 mass on the
    unit sphere is det(a)^{-1} times one, matching the skewed convention
    ||V^A||_{L^2(a dB_1)} = 1."""
    if sph is None:
        sph = sphere_rule(frame.n)
    H = ellipsoid_boundary_mass(Ustar, frame, r, sph, deskewed=deskewed)
    if H <= 1e-300:
        raise VanishingBoundaryMass(f"boundary mass {H:.3e} at r={r:g}")
    norm = np.sqrt(H / (frame.det_a * r ** (frame.n - 1)))
    return PhiRescaled(Ustar, r, norm)


def phi_kappa(t: float, constants: FunctionalConstants) -> float:
    """phi_kappa(t) = exp(-kappa b t^alpha / alpha) t^kappa."""
    c = constants
    return float(np.exp(-(c.kappa * c.b / c.alpha) * t**c.alpha) * t**c.kappa)


def phi_rescale(ustar, constants: FunctionalConstants, t: float):
    """u^phi_t(y) = u*(t y) / phi_kappa(t)."""
    c = constants
    if c.b > 0.0 and t >= (1.0 / c.b) ** (1.0 / c.alpha):
        raise RadiusBeyondTruncationDomain(
            f"t={t:g} beyond (1/b)^(1/alpha)")
    ph = phi_kappa(t, c)
    drift = abs(ph / t**c.kappa - 1.0)
    assert drift <= 1.1 * c.kappa * c.b * t**c.alpha / c.alpha + 1e-14
    return PhiRescaled(ustar, t, ph)


def _sphere_norm(vals, w) -> float:
    return float(np.sqrt(np.dot(w, np.asarray(vals) ** 2)))


def fit_regular_blowup(rescaled, sph=None, n: int | None = None,
                       coarse_deg: float = 2.0) -> BlowupFit:
    """Fit a Re(z'.nu + i |z_n|)^{3/2} on the unit sphere.

    Exhaustive scan of nu at `coarse_deg` resolution, parabolic refinement,
    closed-form optimal amplitude per direction.  Raises DegenerateFit when
    the best residual exceeds half the field norm or the amplitude is not
    positive.
    """
    if sph is None:
        if n is None:
            raise ValueError("pass a sphere rule or the dimension")
        sph = sphere_rule(n)
    n = sph.n
    w = sph.weights
    f = np.asarray(rescaled(sph.nodes), dtype=float)
    fnorm = _sphere_norm(f, w)
    if fnorm <= 1e-300:
        raise DegenerateFit("field vanishes on the unit sphere")

    def misfit(nu):
        model = HalfSpaceSolution(kappa=1.5, nu=nu, n=n)(sph.nodes)
        mm = float(np.dot(w, model * model))
        fm = float(np.dot(w, f * model))
        amp = fm / mm
        res2 = float(np.dot(w, (f - amp * model) ** 2))
        return res2, amp

    if n == 2:
        cands = [np.array([1.0]), np.array([-1.0])]
        best = min(range(2), key=lambda k: misfit(cands[k])[0])
        nu = cands[best]
        res2, amp = misfit(nu)
    else:
        step = np.deg2rad(coarse_deg)
        thetas = np.arange(0.0, 2.0 * np.pi, step)
        vals = [misfit(np.array([np.cos(t), np.sin(t)]))[0] for t in thetas]
        k = int(np.argmin(vals))
        # parabolic refinement through the three neighboring samples
        f0, f1, f2 = vals[k - 1], vals[k], vals[(k + 1) % len(vals)]
        denom = f0 - 2.0 * f1 + f2
        shift = 0.5 * (f0 - f2) / denom if abs(denom) > 1e-300 else 0.0
        theta = thetas[k] + np.clip(shift, -1.0, 1.0) * step
        nu = np.array([np.cos(theta), np.sin(theta)])
        res2, amp = misfit(nu)

    residual = float(np.sqrt(max(res2, 0.0)))
    if amp <= 0.0 or residual > 0.5 * fnorm:
        raise DegenerateFit(
            f"3/2 model misfit {residual:.3e} vs field norm {fnorm:.3e}")
    return BlowupFit(kind="regular", t=np.nan, residual=residual, norm=fnorm,
                     params={"amplitude": float(amp), "nu": nu})


def _thin_gradient_matrix(q: PolyField, n: int) -> np.ndarray:
    """Columns j: coefficients of d_j q restricted to y_n = 0 in the
    monomial basis of thin-space polynomials."""
    from itertools import product as _ip
    deg = int(q.exponents.sum(axis=1).max()) - 1
    monos = [e for e in _ip(range(deg + 1), repeat=n - 1) if sum(e) == deg]
    mono_idx = {e: i for i, e in enumerate(monos)}
    M = np.zeros((len(monos), n - 1))
    for (exps, coef) in zip(q.exponents, q.coeffs):
        if exps[-1] != 0:
            continue  # vanishes on the plane
        for j in range(n - 1):
            if exps[j] == 0:
                continue
            tgt = tuple(exps[k] - (k == j) for k in range(n - 1))
            M[mono_idx[tgt], j] += coef * exps[j]
    return M


def fit_singular_blowup(rescaled, m: int, sph=None, n: int | None = None,
                        nonneg_tol: float = 1e-6) -> BlowupFit:
    """Least-squares fit in the even-in-x_n harmonic basis of degree 2m.

    Reports the monomial coefficients, the stratum dimension d (null space
    of the thin-gradient coefficient matrix) and the sphere-L^2 residual.
    """
    if sph is None:
        if n is None:
            raise ValueError("pass a sphere rule or the dimension")
        sph = sphere_rule(n)
    n = sph.n
    w = sph.weights
    f = np.asarray(rescaled(sph.nodes), dtype=float)
    fnorm = _sphere_norm(f, w)
    if fnorm <= 1e-300:
        raise DegenerateFit("field vanishes on the unit sphere")

    basis = harmonic_basis(n, 2 * m)
    sw = np.sqrt(w)
    D = np.column_stack([np.asarray(q(sph.nodes), dtype=float) * sw
                         for q in basis])
    coef, *_ = np.linalg.lstsq(D, f * sw, rcond=None)
    residual = float(np.linalg.norm(D @ coef - f * sw))
    if residual > 0.5 * fnorm:
        raise DegenerateFit(
            f"degree-{2 * m} misfit {residual:.3e} vs norm {fnorm:.3e}")

    exps = basis[0].exponents
    mono_coeffs = sum(c * q.coeffs for c, q in zip(coef, basis))
    q_fit = PolyField(exps, mono_coeffs)

    # nonnegativity of the blowup on the thin plane
    probe = sph.nodes.copy()
    probe[:, -1] = 0.0
    nrm = np.linalg.norm(probe, axis=1)
    keep = nrm > 1e-12
    probe = probe[keep] / nrm[keep][:, None]
    qvals = np.asarray(q_fit(probe), dtype=float)
    qscale = max(float(np.abs(qvals).max()), 1e-300)
    if qvals.min() < -nonneg_tol * qscale:
        raise NonnegativityViolated(
            f"fitted blowup dips to {qvals.min():.3e} on the thin plane")

    G = _thin_gradient_matrix(q_fit, n)
    sv = np.linalg.svd(G, compute_uv=False) if G.size else np.zeros(0)
    top = sv[0] if len(sv) else 0.0
    rank = int(np.sum(sv > 1e-6 * top)) if top > 0.0 else 0
    d = (n - 1) - rank
    assert 0 <= d <= n - 2
    return BlowupFit(kind="singular", t=np.nan, residual=residual,
                     norm=fnorm,
                     params={"m": m, "exponents": exps,
                             "coefficients": mono_coeffs, "poly": q_fit,
                             "d": d})


@dataclass(frozen=True)
class ClassifyConfig:
    """Knobs of the classification pipeline."""

    kappa0: float = 4.0
    alpha: float = 0.5
    gauge_M: float = 0.005
    band: float = 0.15
    min_frequency: float = 1.35
    r_lo: float | None = None
    r_hi: float | None = None
    density_factor: float = 1.0  # density measured at factor * trusted r_lo
    sphere_order: int | None = None

    def constants(self, n: int, kappa: float = 1.5) -> FunctionalConstants:
        return FunctionalConstants(kappa=kappa, n=n, kappa0=self.kappa0,
                                   alpha=self.alpha, M=self.gauge_M)


def _singular_targets(kappa0: float):
    out, k = [], 1
    while 2 * k <= kappa0 + 1e-9:
        out.append(2 * k)
        k += 1
    return out


def classify(U, A: CoefficientField, x0,
             config: ClassifyConfig = ClassifyConfig(),
             cs: CoincidenceSet | None = None) -> PointClassification:
    """Classify a free-boundary point from its frequency and blowup.

    U may be a Solution or any evaluable field; x0 must lie on the thin
    plane.  Pipeline: symmetrize, frequency profile, intercept
    extrapolation, band test, model fit at the smallest trusted scale.
    """
    if isinstance(x0, FreeBoundaryPoint):
        x0 = x0.location
    x0 = np.asarray(x0, dtype=float)
    fld = U.field if isinstance(U, Solution) else U
    frame = deskew_frame(A, x0)
    ustar = EvenPart(DeskewedField(fld, frame))

    h = fld.grid.h if isinstance(fld, ScalarField) else None
    rmax = valid_radius(frame)
    r_lo = config.r_lo if config.r_lo is not None else \
        (4.0 * h if h is not None else 0.02 * rmax)
    # keep a margin below the valid radius: the top few percent graze the
    # truncation boundary and pick up quadrature noise
    r_hi = config.r_hi if config.r_hi is not None else 0.9 * rmax
    consts = config.constants(frame.n)
    scale = fld.scale() if isinstance(fld, ScalarField) else None

    rule = ball_rule(frame.n, order=config.sphere_order)
    sph = sphere_rule(frame.n, order=config.sphere_order)
    try:
        fp, wp = profile(ustar, frame, consts, r_lo, r_hi, h=h, Lam=A.Lam,
                         rule=rule, sph=sph, scale=scale)
        kappa, conf = frequency_at_point(fp)
    except (VanishingBoundaryMass, InsufficientSamples) as exc:
        return PointClassification(
            x0=x0, kappa=float("nan"), confidence=float("nan"),
            verdict="Undetermined", detail={"reason": str(exc)})

    t_fit = float(fp.radii[fp.trusted].min()) if fp.trusted.any() else r_lo
    out = PointClassification(x0=x0, kappa=kappa, confidence=conf,
                              verdict="Undetermined", profile=fp, weiss=wp)

    if kappa < config.min_frequency:
        out.detail = {"reason": "below minimal frequency - numerical artifact"}
        return out

    # rotation diagnostics: sphere-L1 drift along a short t-ladder
    ladder = fp.radii[fp.trusted][:4]
    rots = []
    try:
        prev = None
        for t in ladder:
            vt = np.asarray(phi_rescale(ustar, consts, float(t))(sph.nodes))
            if prev is not None:
                rots.append(float(np.dot(sph.weights, np.abs(vt - prev))))
            prev = vt
    except RadiusBeyondTruncationDomain:
        pass
    out.detail["rotation_ladder"] = rots

    if abs(kappa - 1.5) <= config.band:
        try:
            fit = fit_regular_blowup(
                phi_rescale(ustar, consts.with_kappa(1.5), t_fit), sph=sph)
        except DegenerateFit as exc:
            out.detail["reason"] = f"regular fit failed: {exc}"
            return out
        fit.t = t_fit
        nu = fit.params["nu"]
        # undo the gauge factor phi(t)/t^kappa so the amplitude is in the
        # natural t^kappa normalization
        gauge = phi_kappa(t_fit, consts.with_kappa(1.5)) / t_fit**1.5
        out.verdict = "Regular"
        out.detail.update({
            "amplitude": fit.params["amplitude"] * gauge,
            "nu": nu,
            "nu_A": conormal_normal(frame, nu),
            "fit": fit,
        })
        return out

    for target in _singular_targets(config.kappa0):
        if abs(kappa - target) <= config.band:
            mm = int(round(target / 2))
            try:
                fit = fit_singular_blowup(
                    phi_rescale(ustar, consts.with_kappa(target), t_fit),
                    mm, sph=sph)
            except (DegenerateFit, NonnegativityViolated) as exc:
                out.detail["reason"] = f"singular fit failed: {exc}"
                return out
            fit.t = t_fit
            gauge = phi_kappa(t_fit, consts.with_kappa(target)) \
                / t_fit**target
            out.verdict = "Singular"
            out.detail.update({"m": mm, "fit": fit, "d": fit.params["d"],
                               "coefficients":
                                   fit.params["coefficients"] * gauge,
                               "exponents": fit.params["exponents"]})
            if cs is None and isinstance(U, Solution):
                cs = coincidence_set(U)
            if cs is not None:
                try:
                    rd = max(config.density_factor * t_fit, 3.0 * cs.grid.h)
                    out.detail["thin_density"] = thin_density(cs, x0, rd)
                    out.detail["density_radius"] = rd
                except RadiusBelowResolution:
                    pass
            return out

    out.detail["reason"] = f"measured frequency {kappa:.3f} matches no band"
    return out


def conormal_normal(frame: Frame, nu) -> np.ndarray:
    """nu_A: the conormal-adjusted thin-space normal (abar^{-T} nu,
    restricted to the thin plane and normalized)."""
    n = frame.n
    nu = np.asarray(nu, dtype=float)
    embed = np.zeros(n)
    embed[: n - 1] = nu
    w = (frame.abar_inv.T @ embed)[: n - 1]
    return w / np.linalg.norm(w)


def regular_set_graph(points: list[PointClassification],
                      gamma: float = 0.5) -> dict:
    """Local graph of the regular set over its mean conormal normal (n=3).

    Rotates thin coordinates so the mean nu_A is the second thin axis,
    fits x_eta = g(x_xi) by linear regression and reports residuals plus
    pairwise Hoelder diagnostics of nu_A.
    """
    regs = [p for p in points if p.verdict == "Regular"]
    if len(regs) < 3:
        raise TooFewPoints(f"{len(regs)} regular points (need 3)")
    n = len(regs[0].x0)
    if n != 3:
        raise TooFewPoints("graph recovery is defined for n=3 thin planes")

    nus = np.array([p.detail["nu_A"] for p in regs])
    mean = nus.mean(axis=0)
    mean /= np.linalg.norm(mean)
    tang = np.array([-mean[1], mean[0]])
    pts = np.array([p.x0[:2] for p in regs])
    xi = pts @ tang
    eta = pts @ mean
    Amat = np.column_stack([np.ones_like(xi), xi])
    coef, *_ = np.linalg.lstsq(Amat, eta, rcond=None)
    resid = eta - Amat @ coef
    holder = []
    for i in range(len(regs)):
        for j in range(i + 1, len(regs)):
            dist = np.linalg.norm(pts[i] - pts[j])
            if dist > 0.0:
                holder.append(
                    float(np.linalg.norm(nus[i] - nus[j]) / dist**gamma))
    return {
        "mean_nu_A": mean,
        "tangent": tang,
        "intercept": float(coef[0]),
        "slope": float(coef[1]),
        "xi": xi,
        "eta": eta,
        "residuals": resid,
        "max_residual": float(np.abs(resid).max()),
        "holder_diagnostics": holder,
        "points": regs,
    }
