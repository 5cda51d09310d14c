"""Analytic exact solutions: values, gradients, complementarity."""

import numpy as np
import pytest

from thinobstacle.errors import UnknownKind
from thinobstacle.exact import (
    HalfSpaceSolution,
    exact_solution,
    exact_solution_field,
    harmonic_basis,
    named_polynomial,
)
from thinobstacle.grid import Grid
from thinobstacle.presets import coefficient_preset
from thinobstacle.solver import SignoriniProblem, assemble


def test_halfspace_values():
    v = HalfSpaceSolution()
    assert abs(v(np.array([1.0, 0.0])) - 1.0) < 1e-14
    assert abs(v(np.array([-1.0, 0.0]))) < 1e-14
    assert abs(v(np.array([0.0, 1.0])) - (-np.sqrt(2.0) / 2.0)) < 1e-12


def test_halfspace_nonnegative_on_plane():
    v = HalfSpaceSolution()
    t = np.linspace(-1.0, 1.0, 101)
    pts = np.stack([t, np.zeros_like(t)], axis=1)
    vals = v(pts)
    assert vals.min() >= -1e-15
    assert np.all(vals[t <= 0.0] < 1e-15)


def test_halfspace_homogeneity():
    v = HalfSpaceSolution()
    p = np.array([0.3, 0.4])
    for lam in (0.5, 2.0):
        assert abs(v(lam * p) - lam**1.5 * v(p)) < 1e-12


def test_halfspace_harmonic_off_plane():
    # numerically Laplacian-free away from the plane
    v = HalfSpaceSolution()
    h = 1e-4
    p = np.array([0.2, 0.3])
    lap = sum(
        v(p + h * e) + v(p - h * e) - 2.0 * v(p)
        for e in np.eye(2)) / h**2
    assert abs(lap) < 1e-5


def test_halfspace_gradient_matches_fd():
    v = HalfSpaceSolution(kappa=3.5, nu=[0.6, 0.8], amplitude=2.0, n=3)
    p = np.array([0.2, -0.1, 0.3])
    g = v.gradient(p)
    h = 1e-6
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        fd = (v(p + e) - v(p - e)) / (2 * h)
        assert abs(g[d] - fd) < 1e-6


def test_halfspace_one_sided_normal_gradient():
    v = HalfSpaceSolution()
    p = np.array([-0.4, 0.0])  # contact region: d/dn u = -3/2 sqrt(|s|)
    gp = v.gradient(p, side="+")
    gm = v.gradient(p, side="-")
    expect = -1.5 * np.sqrt(0.4)
    assert abs(gp[1] - expect) < 1e-12
    assert abs(gm[1] + expect) < 1e-12
    # flux jump is nonpositive only on the contact set
    q = np.array([0.4, 0.0])
    assert abs(v.gradient(q, side="+")[1]) < 1e-12


def test_skewed_halfspace_contact_follows_frame():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    v = exact_solution("regular", 2, A=A)
    # zero set on the plane is z1 <= 0 with z = abar^{-1} x; x = abar z
    from thinobstacle.coeffs import constant_field, deskew_frame
    fr = deskew_frame(constant_field(A), np.zeros(2))
    for s in (0.1, 0.5):
        on = np.array([s, 0.0]) @ fr.abar.T
        off = np.array([-s, 0.0]) @ fr.abar.T
        assert v(on) > 0.0
        assert abs(v(off)) < 1e-14


def test_named_polynomial_values():
    q = named_polynomial("x1sq_minus_xnsq", 2)
    t = np.linspace(-1, 1, 41)
    plane = np.stack([t, np.zeros_like(t)], axis=1)
    vals = q(plane)
    assert np.abs(vals - t**2).max() < 1e-14  # trace x1^2 >= 0
    # harmonic and even in xn
    p = np.array([0.3, 0.4])
    assert abs(q(p) - q(p * np.array([1.0, -1.0]))) < 1e-14
    assert abs(q(p) - (0.09 - 0.16)) < 1e-14


def test_named_polynomial_n3_variant():
    q = named_polynomial("x1sq_minus_x2sq", 3)
    assert abs(q(np.array([0.5, 0.2, 0.9])) - (0.25 - 0.04)) < 1e-14


def test_unknown_names_raise():
    with pytest.raises(UnknownKind):
        named_polynomial("nope", 2)
    with pytest.raises(UnknownKind):
        exact_solution("nope", 2)


def test_polynomial_gradient_matches_fd():
    q = exact_solution("polynomial", 3, name="x1sq_minus_xnsq",
                       A=np.diag([4.0, 1.0, 1.0]))
    p = np.array([0.2, -0.3, 0.4])
    g = q.gradient(p)
    h = 1e-6
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        assert abs(g[d] - (q(p + e) - q(p - e)) / (2 * h)) < 1e-7


@pytest.mark.parametrize("n,degree,count", [(2, 2, 1), (3, 2, 3), (2, 4, 1),
                                            (3, 4, 5)])
def test_harmonic_basis_dimension(n, degree, count):
    basis = harmonic_basis(n, degree)
    assert len(basis) == count
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((10, n))
    h = 1e-4
    for q in basis:
        # even in x_n
        flipped = pts.copy()
        flipped[:, -1] *= -1.0
        assert np.abs(q(pts) - q(flipped)).max() < 1e-12
        # harmonic (FD Laplacian)
        for p in pts[:3]:
            lap = sum(q(p + h * e) + q(p - h * e) - 2.0 * q(p)
                      for e in np.eye(n)) / h**2
            assert abs(lap) < 1e-5 * max(1.0, abs(q(p)))


def test_exact_field_satisfies_discrete_complementarity():
    # the sampled 3/2 solution nearly solves the discrete problem: residual
    # on the plane has the right sign pattern up to truncation error
    grid = Grid(2, 65)
    fld = exact_solution_field("regular", grid)
    prob = SignoriniProblem(coefficient_preset("identity", 2), grid,
                            exact_solution("regular", 2))
    op = assemble(prob)
    u = fld.values.ravel()
    res = (op.L_sym @ u)[op.thin] * grid.h  # flux-jump scale
    vals = u[op.thin]
    scale = np.abs(u).max()
    # where u > 0: residual ~ 0; where u = 0: residual >= -tol
    free = vals > 1e-8 * scale
    assert np.abs(res[free]).max() < 5e-2 * scale
    assert res.min() > -5e-2 * scale
    assert vals.min() >= -1e-15
