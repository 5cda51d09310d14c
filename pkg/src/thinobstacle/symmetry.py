"""Skewed symmetrization across the thin plane and its energy bookkeeping.

For a center x0 on the thin plane, the reflection P = I - 2 A(x0) e_n e_n^T
/ a_nn maps the ellipsoid E_r(x0) to itself and, after deskewing, is the
plain mirror y_n -> -y_n.  The even/odd parts under P therefore deskew to
the even/odd parts in y_n, the two are A(x0)-orthogonal on every E_r, and
the L^2 and frozen-energy masses split exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientField, Frame, deskew_frame
from .errors import CenterNotOnThinPlane, ZeroEvenEnergy
from .fields import (
    DeskewedField,
    EvenPart,
    OddPart,
    ReflectedEvenPart,
    ReflectedOddPart,
)
from .quadrature import (
    ball_rule,
    ellipsoid_energy,
    ellipsoid_mass,
    valid_radius,
)

__all__ = [
    "SymmetrizedPair",
    "symmetrize",
    "energy_decomposition_audit",
    "quasisymmetry_constant",
    "counterexample_demo",
]


@dataclass
class SymmetrizedPair:
    """Even/odd decomposition of a field under the skewed reflection at x0.

    even/odd live in original coordinates; deskewed_even/deskewed_odd are
    the same fields read through the frame, even/odd in y_n.  valid_radius
    bounds the radii on which every evaluation stays inside the box.
    """

    frame: Frame
    base: object
    even: ReflectedEvenPart
    odd: ReflectedOddPart
    deskewed_even: EvenPart
    deskewed_odd: OddPart
    valid_radius: float


def symmetrize(U, frame_or_A, x0=None) -> SymmetrizedPair:
    """Even/odd split of U at a thin-plane center.

    Accepts either a prebuilt Frame, or a CoefficientField plus x0.
    """
    if isinstance(frame_or_A, Frame):
        frame = frame_or_A
    else:
        frame = deskew_frame(frame_or_A, np.asarray(x0, dtype=float))
    if abs(frame.x0[-1]) > 1e-12 or frame.P is None:
        raise CenterNotOnThinPlane(f"{frame.x0} is off the thin plane")
    u = DeskewedField(U, frame)
    return SymmetrizedPair(
        frame=frame,
        base=U,
        even=ReflectedEvenPart(U, frame),
        odd=ReflectedOddPart(U, frame),
        deskewed_even=EvenPart(u),
        deskewed_odd=OddPart(u),
        valid_radius=valid_radius(frame),
    )


def energy_decomposition_audit(pair: SymmetrizedPair, r: float,
                               rule=None, sph=None) -> dict:
    """Check mass and frozen-energy additivity of the even/odd split on E_r.

    Returns relative residuals of
        int_{E_r} U^2           = int (U_even)^2 + int (U_odd)^2
        int_{E_r} <A(x0)dU, dU> = same for the parts,
    all integrals via deskewed quadrature.
    """
    if rule is None:
        rule = ball_rule(pair.frame.n)
    fr = pair.frame
    u = DeskewedField(pair.base, fr)
    m_all = ellipsoid_mass(u, fr, r, rule, deskewed=True)
    m_e = ellipsoid_mass(pair.deskewed_even, fr, r, rule, deskewed=True)
    m_o = ellipsoid_mass(pair.deskewed_odd, fr, r, rule, deskewed=True)
    e_all = ellipsoid_energy(u, fr, r, rule, deskewed=True)
    e_e = ellipsoid_energy(pair.deskewed_even, fr, r, rule, deskewed=True)
    e_o = ellipsoid_energy(pair.deskewed_odd, fr, r, rule, deskewed=True)

    def rel(total, a, b):
        return abs(total - a - b) / max(abs(total), 1e-300)

    return {
        "mass": (m_all, m_e, m_o, rel(m_all, m_e, m_o)),
        "energy": (e_all, e_e, e_o, rel(e_all, e_e, e_o)),
        "residual_mass": rel(m_all, m_e, m_o),
        "residual_energy": rel(e_all, e_e, e_o),
    }


def quasisymmetry_constant(U, A: CoefficientField, samples,
                           rule=None) -> dict:
    """Empirical quasisymmetry constant over (x0, r) samples.

    Q = max over samples of  energy(U on E_r) / energy(U_even on E_r);
    symmetric solutions give Q = 1 up to quadrature.  Samples whose even
    part carries no energy are skipped and reported.
    """
    results, skipped = [], []
    qmax = 1.0
    for x0, r in samples:
        pair = symmetrize(U, A, x0=x0)
        if r > pair.valid_radius:
            skipped.append((tuple(np.atleast_1d(x0)), r, "radius"))
            continue
        fr = pair.frame
        u = DeskewedField(U, fr)
        e_all = ellipsoid_energy(u, fr, r, rule, deskewed=True)
        e_even = ellipsoid_energy(pair.deskewed_even, fr, r, rule,
                                  deskewed=True)
        if e_even <= 1e-14 * max(e_all, 1.0):
            skipped.append((tuple(np.atleast_1d(x0)), r, "zero even energy"))
            continue
        ratio = e_all / e_even
        results.append({"x0": np.asarray(x0, dtype=float), "r": float(r),
                        "ratio": float(ratio)})
        qmax = max(qmax, ratio)
    if not results:
        x0, r = samples[0]
        raise ZeroEvenEnergy(x0, r)
    return {"Q": float(qmax), "samples": results, "skipped": skipped}


def counterexample_demo(deltas=(0.1, 0.01), n_quad: int = 64) -> dict:
    """Why even parts are compared against their own replacements, not used
    as competitors: a one-dimensional demonstration.

    u(x) = x + x^2/4 is harmonic-like data whose even part u*(x) = x^2/4
    is NOT an almost minimizer with a vanishing gauge: on (-delta, delta)
    the competitor that is admissible for u* can have zero energy, while
    u* itself carries energy delta^3/12 per half-interval (the reported
    figure).  The original u stays almost harmonic: its energy exceeds the
    affine replacement's by a factor 1 + delta^2/12 -> 1.
    """
    s, w = np.polynomial.legendre.leggauss(n_quad)
    out = {"deltas": [], "schema": "counterexample-1d"}
    for delta in deltas:
        # half-interval (0, delta): x = delta (s+1)/2
        xh = 0.5 * delta * (s + 1.0)
        wh = 0.5 * delta * w
        ustar_energy_half = float(np.dot(wh, (0.5 * xh) ** 2))  # ((x^2/4)')^2
        competitor_energy = 0.0  # the admissible competitor is constant
        # full interval (-delta, delta) for the almost-harmonicity of u
        xf = delta * s
        wf = delta * w
        u_energy = float(np.dot(wf, (1.0 + 0.5 * xf) ** 2))
        affine_energy = 2.0 * delta  # slope (u(d)-u(-d))/(2d) = 1
        out["deltas"].append({
            "delta": float(delta),
            "ustar_energy_half_interval": ustar_energy_half,
            "ustar_energy_closed_form": delta**3 / 12.0,
            "competitor_energy": competitor_energy,
            "ratio": float("inf"),
            "u_energy": u_energy,
            "u_affine_replacement_energy": affine_energy,
            "u_excess_ratio": u_energy / affine_energy,
            "u_excess_bound": 1.0 + delta**2 / 12.0,
        })
    return out
