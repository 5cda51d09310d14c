"""Sphere and ball quadrature rules, and ellipsoid integrals via deskewing.

All rules place their nodes strictly off the thin plane x_n = 0, so
integrands built from one-sided gradients always pick the half-space the
node actually lies in.

Ellipsoid integrals use the change of variables x = abar y + x0:

    int_{E_r} U^2 dx                    = det(a) int_{B_r} u^2 dy
    int_{E_r} <A(x0) grad U, grad U> dx = det(a) int_{B_r} |grad u|^2 dy
    int_{dE_r} U^2 mu dS                = det(a) int_{dB_r} u^2 dS

with u(y) = U(abar y + x0) and mu the conformal factor of the frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import Frame, conformal_factor
from .errors import EllipsoidExceedsDomain
from .fields import DeskewedField, gradient_of

__all__ = [
    "QuadratureRule",
    "sphere_rule",
    "ball_rule",
    "sphere_integral",
    "ball_integral",
    "valid_radius",
    "ellipsoid_energy",
    "ellipsoid_boundary_mass",
    "ellipsoid_mass",
    "change_of_variables_audit",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes on the unit sphere or unit ball with weights summing to the
    measure of the domain."""

    kind: str  # "sphere" or "ball"
    n: int
    nodes: np.ndarray  # (K, n)
    weights: np.ndarray  # (K,)

    def __post_init__(self):
        if self.kind not in ("sphere", "ball"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if np.any(self.nodes[:, -1] == 0.0):
            raise ValueError("quadrature node on the thin plane")


def sphere_rule(n: int, order: int | None = None) -> QuadratureRule:
    """Quadrature on the unit sphere S^{n-1}.

    n=2: equispaced angles with a half-step offset (trigonometric accuracy,
    no node on the plane).  n=3: Gauss-Legendre in the polar cosine (even
    count, so u=0 is never a node) times a uniform azimuthal rule.
    """
    if n == 2:
        q = order or 256
        theta = 2.0 * np.pi * (np.arange(q) + 0.5) / q
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(q, 2.0 * np.pi / q)
    elif n == 3:
        nu = order or 32
        if nu % 2 == 1:
            nu += 1
        nphi = 2 * nu
        u, wu = np.polynomial.legendre.leggauss(nu)
        phi = 2.0 * np.pi * (np.arange(nphi) + 0.5) / nphi
        s = np.sqrt(1.0 - u**2)
        nodes = np.empty((nu * nphi, 3))
        weights = np.empty(nu * nphi)
        k = 0
        for i in range(nu):
            nodes[k:k + nphi, 0] = s[i] * np.cos(phi)
            nodes[k:k + nphi, 1] = s[i] * np.sin(phi)
            nodes[k:k + nphi, 2] = u[i]
            weights[k:k + nphi] = wu[i] * 2.0 * np.pi / nphi
            k += nphi
    else:
        raise ValueError("dimension must be 2 or 3")
    return QuadratureRule("sphere", n, nodes, weights)


def ball_rule(n: int, n_radial: int = 24, order: int | None = None) -> QuadratureRule:
    """Product rule on the unit ball: Gauss-Legendre radial shells times a
    sphere rule, with weights absorbing the s^{n-1} Jacobian."""
    sph = sphere_rule(n, order)
    s, ws = np.polynomial.legendre.leggauss(n_radial)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    nodes = (s[:, None, None] * sph.nodes[None, :, :]).reshape(-1, n)
    weights = (ws[:, None] * s[:, None] ** (n - 1) * sph.weights[None, :]).ravel()
    return QuadratureRule("ball", n, nodes, weights)


def sphere_integral(f, rule: QuadratureRule, r: float = 1.0):
    """int_{dB_r} f dS using the scaled unit-sphere rule."""
    vals = np.asarray(f(r * rule.nodes), dtype=float)
    return float(r ** (rule.n - 1) * np.dot(rule.weights, vals))


def ball_integral(f, rule: QuadratureRule, r: float = 1.0):
    """int_{B_r} f dy using the scaled unit-ball rule."""
    vals = np.asarray(f(r * rule.nodes), dtype=float)
    return float(r**rule.n * np.dot(rule.weights, vals))


def valid_radius(frame: Frame, box: float = 1.0) -> float:
    """Largest r with E_r(x0) inside the box [-box, box]^n.

    max over |y|<=r of |(abar y)_d| = r * |row_d(abar)|, so clearance in
    coordinate d gives r_d = (box - |x0_d|) / |row_d(abar)|.
    """
    row_norms = np.linalg.norm(frame.abar, axis=1)
    return float(np.min((box - np.abs(frame.x0)) / row_norms))


def _require_inside(frame: Frame, r: float):
    rmax = valid_radius(frame)
    if r > rmax * (1.0 + 1e-12):
        raise EllipsoidExceedsDomain(
            f"E_{r:g}({frame.x0}) exceeds the box (max radius {rmax:g})")


def ellipsoid_energy(U, frame: Frame, r: float,
                     rule: QuadratureRule | None = None,
                     deskewed: bool = False) -> float:
    """int_{E_r(x0)} <A(x0) grad U, grad U> dx = det(a) int_{B_r} |grad u|^2.

    Pass deskewed=True when U is already a field in deskewed coordinates.
    """
    _require_inside(frame, r)
    if rule is None:
        rule = ball_rule(frame.n)
    u = U if deskewed else DeskewedField(U, frame)
    g = gradient_of(u, r * rule.nodes)
    vals = np.einsum("ki,ki->k", g, g)
    return float(frame.det_a * r**frame.n * np.dot(rule.weights, vals))


def ellipsoid_boundary_mass(U, frame: Frame, r: float,
                            rule: QuadratureRule | None = None,
                            deskewed: bool = False) -> float:
    """int_{dE_r(x0)} U^2 mu dS = det(a) int_{dB_r} u^2 dS."""
    _require_inside(frame, r)
    if rule is None:
        rule = sphere_rule(frame.n)
    u = U if deskewed else DeskewedField(U, frame)
    vals = np.asarray(u(r * rule.nodes), dtype=float) ** 2
    return float(frame.det_a * r ** (frame.n - 1) * np.dot(rule.weights, vals))


def ellipsoid_mass(U, frame: Frame, r: float,
                   rule: QuadratureRule | None = None,
                   deskewed: bool = False) -> float:
    """int_{E_r(x0)} U^2 dx = det(a) int_{B_r} u^2 dy."""
    _require_inside(frame, r)
    if rule is None:
        rule = ball_rule(frame.n)
    u = U if deskewed else DeskewedField(U, frame)
    vals = np.asarray(u(r * rule.nodes), dtype=float) ** 2
    return float(frame.det_a * r**frame.n * np.dot(rule.weights, vals))


def _ball_volume(n: int) -> float:
    return np.pi if n == 2 else 4.0 * np.pi / 3.0


def _sample_ball(rng, count: int, n: int) -> np.ndarray:
    z = rng.standard_normal((count, n))
    z /= np.linalg.norm(z, axis=1)[:, None]
    radii = rng.random(count) ** (1.0 / n)
    pts = z * radii[:, None]
    # nudge any plane-exact sample off the plane
    on = pts[:, -1] == 0.0
    pts[on, -1] = 1e-13
    return pts


def change_of_variables_audit(U, frame: Frame, r: float,
                              mc_samples: int = 200_000, rng=None,
                              rule: QuadratureRule | None = None,
                              sph: QuadratureRule | None = None) -> dict:
    """Independent check of the three deskewing identities.

    The ellipsoid sides use Monte Carlo in the original coordinates (volume
    integrals) and a mapped surface rule with the explicit area distortion
    |det(abar)| |abar^{-T} omega| (boundary integral); the ball sides use
    the deterministic deskewed rules.  Returns relative residuals.
    """
    _require_inside(frame, r)
    rng = np.random.default_rng(rng if rng is not None else 0)
    if rule is None:
        rule = ball_rule(frame.n)
    if sph is None:
        sph = sphere_rule(frame.n)
    n = frame.n
    det_abar = abs(float(np.linalg.det(frame.abar)))

    y = r * _sample_ball(rng, mc_samples, n)
    x = frame.reskew(y)
    vol = det_abar * r**n * _ball_volume(n)

    u2 = np.asarray(U(x), dtype=float) ** 2
    lhs_mass = vol * float(np.mean(u2))
    rhs_mass = ellipsoid_mass(U, frame, r, rule)

    g = gradient_of(U, x)
    A0 = frame.A
    quad = np.einsum("ki,ij,kj->k", g, A0, g)
    lhs_energy = vol * float(np.mean(quad))
    rhs_energy = ellipsoid_energy(U, frame, r, rule)

    # boundary: parametrize dE_r by the unit sphere, area element
    # r^{n-1} det(abar) |abar^{-T} omega| d(sigma)
    omega = sph.nodes
    xb = frame.reskew(r * omega)
    jac = det_abar * np.linalg.norm(omega @ frame.abar_inv, axis=1)
    mu = conformal_factor(frame, xb - frame.x0)
    ub2 = np.asarray(U(xb), dtype=float) ** 2
    lhs_bdry = float(r ** (n - 1) * np.dot(sph.weights, ub2 * mu * jac))
    rhs_bdry = ellipsoid_boundary_mass(U, frame, r, sph)

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    return {
        "mass": (lhs_mass, rhs_mass, rel(lhs_mass, rhs_mass)),
        "energy": (lhs_energy, rhs_energy, rel(lhs_energy, rhs_energy)),
        "boundary": (lhs_bdry, rhs_bdry, rel(lhs_bdry, rhs_bdry)),
    }
