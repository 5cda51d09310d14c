"""Weiss and Almgren-type monotonicity functionals on deskewed ellipsoids.

All functionals act on the deskewed even part u* of a field at a thin-plane
center and reduce to ball/sphere integrals:

    W_kappa(r) = det(a) e^{a r^alpha} / r^{n+2 kappa-2}
                 [ E(r) - kappa (1 - b r^alpha) / r * H(r) ]
    N(r)       = r E(r) / H(r)
    Nhat(r)    = min( N(r) / (1 - b r^alpha), kappa0 )

with E(r) = int_{B_r} |grad u*|^2 and H(r) = int_{dB_r} (u*)^2.  The gauge
constants a = M (n + 2 kappa - 2)/alpha and b = M (n + 2 kappa0)/alpha are
recomputed from (M, alpha, kappa, kappa0) on demand; M = 0 gives the exact
(a = b = 0) form used for homogeneous closed-form fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .coeffs import Frame
from .errors import (
    InsufficientSamples,
    RadiusBeyondTruncationDomain,
    VanishingBoundaryMass,
)
from .quadrature import (
    ball_rule,
    ellipsoid_boundary_mass,
    ellipsoid_energy,
    sphere_rule,
    valid_radius,
)

__all__ = [
    "FunctionalConstants",
    "FrequencyProfile",
    "WeissProfile",
    "weiss",
    "almgren",
    "truncated_frequency",
    "profile",
    "frequency_at_point",
    "export_profile_csv",
]

LADDER_RATIO = 2.0 ** 0.25


@dataclass(frozen=True)
class FunctionalConstants:
    """Gauge data (kappa, kappa0, alpha, M) with derived a and b.

    M is the gauge slope of the functional, not necessarily the master
    ellipticity constant of the coefficient field: for exact fields it is
    zero, and for solved fields a small empirical value keeps the
    truncation window (r < (1/b)^{1/alpha}) above the grid scale.
    """

    kappa: float
    n: int
    kappa0: float = 4.0
    alpha: float = 0.5
    M: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.kappa <= self.kappa0):
            raise ValueError("need 0 < kappa <= kappa0")
        if self.kappa0 < 2.0:
            raise ValueError("truncation level kappa0 must be >= 2")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.M < 0.0:
            raise ValueError("gauge slope M must be >= 0")

    @property
    def a(self) -> float:
        return self.M * (self.n + 2.0 * self.kappa - 2.0) / self.alpha

    @property
    def b(self) -> float:
        return self.M * (self.n + 2.0 * self.kappa0) / self.alpha

    def with_kappa(self, kappa: float) -> "FunctionalConstants":
        return FunctionalConstants(kappa=kappa, n=self.n, kappa0=self.kappa0,
                                   alpha=self.alpha, M=self.M)


@dataclass
class FrequencyProfile:
    x0: np.ndarray
    radii: np.ndarray
    N: np.ndarray
    Nhat: np.ndarray
    boundary_mass: np.ndarray
    trusted: np.ndarray  # boolean mask into radii
    trusted_window: tuple
    constants: FunctionalConstants
    kappa_extrapolated: float | None = None


@dataclass
class WeissProfile:
    x0: np.ndarray
    kappa: float
    radii: np.ndarray
    W: np.ndarray
    trusted: np.ndarray
    constants: FunctionalConstants


def weiss(Ustar, frame: Frame, constants: FunctionalConstants, r: float,
          rule=None, sph=None, deskewed: bool = True) -> float:
    """W_kappa^A(r) at the frame center; Ustar is the (deskewed) even part."""
    c = constants
    E = ellipsoid_energy(Ustar, frame, r, rule, deskewed=deskewed)
    H = ellipsoid_boundary_mass(Ustar, frame, r, sph, deskewed=deskewed)
    # det(a) is already inside the two ellipsoid integrals
    pref = np.exp(c.a * r**c.alpha) / r ** (c.n + 2.0 * c.kappa - 2.0)
    return float(pref * (E - c.kappa * (1.0 - c.b * r**c.alpha) / r * H))


def almgren(Ustar, frame: Frame, r: float, rule=None, sph=None,
            deskewed: bool = True, scale: float | None = None) -> float:
    """N^A(r) = r E(r) / H(r)."""
    E = ellipsoid_energy(Ustar, frame, r, rule, deskewed=deskewed)
    H = ellipsoid_boundary_mass(Ustar, frame, r, sph, deskewed=deskewed)
    floor = 1e-14 * (scale if scale is not None else 1.0) ** 2
    if H <= max(floor, 1e-300):
        raise VanishingBoundaryMass(
            f"boundary mass {H:.3e} at r={r:g}: center inside a zero set")
    return float(r * E / H)


def truncated_frequency(Ustar, frame: Frame,
                        constants: FunctionalConstants, r: float,
                        **kw) -> float:
    """Nhat(r) = min(N(r) / (1 - b r^alpha), kappa0)."""
    c = constants
    damp = 1.0 - c.b * r**c.alpha
    if damp <= 0.0:
        raise RadiusBeyondTruncationDomain(
            f"r={r:g} is beyond (1/b)^(1/alpha)={(1.0 / c.b) ** (1.0 / c.alpha):g}")
    N = almgren(Ustar, frame, r, **kw)
    return float(min(N / damp, c.kappa0))


def radius_ladder(r_lo: float, r_hi: float,
                  ratio: float = LADDER_RATIO) -> np.ndarray:
    if not (0.0 < r_lo < r_hi):
        raise ValueError("need 0 < r_lo < r_hi")
    count = int(np.floor(np.log(r_hi / r_lo) / np.log(ratio))) + 1
    return r_lo * ratio ** np.arange(count)


def trusted_window(frame: Frame, constants: FunctionalConstants,
                   r_lo: float, r_hi: float, h: float | None = None,
                   Lam: float | None = None) -> tuple:
    """[max(4h, r_lo), min(r_hi, dist(x0, box)/sqrt(Lam), (2b)^{-1/alpha})]."""
    lo = max(r_lo, 4.0 * h if h is not None else 0.0)
    hi = min(r_hi, valid_radius(frame))
    if Lam is not None:
        dist = float(np.min(1.0 - np.abs(frame.x0)))
        hi = min(hi, dist / np.sqrt(Lam))
    if constants.b > 0.0:
        hi = min(hi, (2.0 * constants.b) ** (-1.0 / constants.alpha))
    return (lo, hi)


def profile(Ustar, frame: Frame, constants: FunctionalConstants,
            r_lo: float, r_hi: float, h: float | None = None,
            Lam: float | None = None, rule=None, sph=None,
            deskewed: bool = True, scale: float | None = None):
    """Frequency and Weiss profiles on a geometric radius ladder.

    Returns (FrequencyProfile, WeissProfile); radii outside the trusted
    window are still sampled but flagged untrusted.
    """
    if rule is None:
        rule = ball_rule(frame.n)
    if sph is None:
        sph = sphere_rule(frame.n)
    radii = radius_ladder(r_lo, min(r_hi, valid_radius(frame)))
    c = constants
    N = np.full(len(radii), np.nan)
    Nhat = np.full(len(radii), np.nan)
    W = np.full(len(radii), np.nan)
    Hm = np.zeros(len(radii))
    for k, r in enumerate(radii):
        E = ellipsoid_energy(Ustar, frame, r, rule, deskewed=deskewed)
        H = ellipsoid_boundary_mass(Ustar, frame, r, sph, deskewed=deskewed)
        Hm[k] = H
        floor = 1e-14 * (scale if scale is not None else 1.0) ** 2
        if H > max(floor, 1e-300):
            N[k] = r * E / H
            damp = 1.0 - c.b * r**c.alpha
            if damp > 0.0:
                Nhat[k] = min(N[k] / damp, c.kappa0)
        pref = np.exp(c.a * r**c.alpha) / r ** (c.n + 2.0 * c.kappa - 2.0)
        W[k] = pref * (E - c.kappa * (1.0 - c.b * r**c.alpha) / r * H)

    lo, hi = trusted_window(frame, c, r_lo, r_hi, h=h, Lam=Lam)
    trusted = (radii >= lo * (1.0 - 1e-12)) & (radii <= hi * (1.0 + 1e-12)) \
        & np.isfinite(Nhat)
    fp = FrequencyProfile(x0=frame.x0, radii=radii, N=N, Nhat=Nhat,
                          boundary_mass=Hm, trusted=trusted,
                          trusted_window=(lo, hi), constants=c)
    wp = WeissProfile(x0=frame.x0, kappa=c.kappa, radii=radii, W=W,
                      trusted=trusted, constants=c)
    return fp, wp


def frequency_at_point(fp: FrequencyProfile,
                       n_fit: int = 8) -> tuple[float, float]:
    """Extrapolate kappa(x0) = Nhat(0+) by an affine fit in r^alpha.

    The model Nhat ~ kappa + c r^alpha matches the first-order effect of the
    1/(1 - b r^alpha) correction; the intercept is the frequency, the fit
    RMS the confidence figure.  Requires at least 6 trusted samples.

    Only the n_fit smallest trusted radii enter the fit: at larger radii
    the profile is dominated by the smooth background away from the
    center and the affine small-radius model no longer applies.
    """
    mask = fp.trusted
    if int(mask.sum()) < 6:
        raise InsufficientSamples(
            f"only {int(mask.sum())} trusted radii (need 6)")
    t = fp.radii[mask] ** fp.constants.alpha
    y = fp.Nhat[mask]
    order = np.argsort(t)[: max(int(n_fit), 6)]
    t, y = t[order], y[order]
    Amat = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(Amat, y, rcond=None)
    resid = y - Amat @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    fp.kappa_extrapolated = float(coef[0])
    return float(coef[0]), rms


def export_profile_csv(path, fp: FrequencyProfile, wp: WeissProfile) -> None:
    """One CSV per center: header row with x0, kappa and constants, then
    columns r, N, Nhat, W_kappa, trusted."""
    c = fp.constants
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            f"x0={' '.join(f'{v:.17g}' for v in np.atleast_1d(fp.x0))}",
            f"kappa={wp.kappa:.17g}", f"kappa0={c.kappa0:.17g}",
            f"alpha={c.alpha:.17g}", f"M={c.M:.17g}",
            f"a={c.a:.17g}", f"b={c.b:.17g}",
        ])
        w.writerow(["r", "N", "Nhat", "W_kappa", "trusted"])
        for k in range(len(fp.radii)):
            w.writerow([f"{fp.radii[k]:.17g}", f"{fp.N[k]:.17g}",
                        f"{fp.Nhat[k]:.17g}", f"{wp.W[k]:.17g}",
                        int(fp.trusted[k])])
