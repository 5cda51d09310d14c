"""Skewed symmetrization, energy decomposition, quasisymmetry, and the
one-dimensional counterexample demonstration."""

import numpy as np
import pytest

from thinobstacle.coeffs import constant_field, deskew_frame
from thinobstacle.errors import CenterNotOnThinPlane
from thinobstacle.exact import HalfSpaceSolution, exact_solution
from thinobstacle.presets import coefficient_preset
from thinobstacle.quadrature import ellipsoid_energy
from thinobstacle.symmetry import (
    counterexample_demo,
    energy_decomposition_audit,
    quasisymmetry_constant,
    symmetrize,
)


def poly(fn):
    def f(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return fn(x)
    return f


def test_even_part_of_even_field_is_identity():
    U = poly(lambda x: x[:, 0] ** 2 + x[:, 1] ** 2)
    pair = symmetrize(U, constant_field(np.eye(2)), x0=[0.0, 0.0])
    p = np.array([[0.3, 0.4]])
    assert abs(pair.even(p)[0] - U(p)[0]) < 1e-14
    assert abs(pair.odd(p)[0]) < 1e-14


def test_odd_part_diagonal_coeffs():
    # diagonal A: P is the plain mirror, so U = x_n splits into odd = U
    U = poly(lambda x: x[:, 1])
    pair = symmetrize(U, constant_field(np.diag([4.0, 1.0])), x0=[0.0, 0.0])
    p = np.array([[0.2, 0.5]])
    assert abs(pair.odd(p)[0] - 0.5) < 1e-14
    assert abs(pair.even(p)[0]) < 1e-14


def test_offdiag_reflection_by_hand():
    # A = [[1,.5],[.5,1]]: P = [[1,-1],[0,-1]], so U = x_2 has
    # U(P x) = -x_2 and the even part of x_2 vanishes identically
    A = constant_field(np.array([[1.0, 0.5], [0.5, 1.0]]))
    U = poly(lambda x: x[:, 1])
    pair = symmetrize(U, A, x0=[0.0, 0.0])
    p = np.array([[0.3, 0.4]])
    assert abs(pair.even(p)[0]) < 1e-14
    assert abs(pair.odd(p)[0] - 0.4) < 1e-14
    # U = x_1 picks up half the mirror: even part x_1 - x_2/2
    V = poly(lambda x: x[:, 0])
    pair2 = symmetrize(V, A, x0=[0.0, 0.0])
    assert abs(pair2.even(p)[0] - (0.3 - 0.2)) < 1e-14


def test_deskewed_parts_agree_with_reflected_parts():
    A = coefficient_preset("offdiag", 2)
    U = HalfSpaceSolution(nu=[1.0])
    pair = symmetrize(U, A, x0=[0.1, 0.0])
    rng = np.random.default_rng(0)
    y = 0.3 * rng.standard_normal((20, 2))
    x = pair.frame.reskew(y)
    assert np.abs(pair.deskewed_even(y) - pair.even(x)).max() < 1e-12
    assert np.abs(pair.deskewed_odd(y) - pair.odd(x)).max() < 1e-12


def test_center_off_plane_rejected():
    with pytest.raises(CenterNotOnThinPlane):
        symmetrize(HalfSpaceSolution(), constant_field(np.eye(2)),
                   x0=[0.0, 0.3])


def test_projection_property():
    # symmetrizing the even part changes nothing; parts sum to the field
    A = coefficient_preset("offdiag", 2)
    U = HalfSpaceSolution(nu=[1.0])
    pair = symmetrize(U, A, x0=[0.0, 0.0])
    pair2 = symmetrize(pair.even, A, x0=[0.0, 0.0])
    rng = np.random.default_rng(1)
    x = 0.3 * rng.standard_normal((20, 2))
    assert np.abs(pair2.even(x) - pair.even(x)).max() < 1e-12
    assert np.abs(pair2.odd(x)).max() < 1e-12
    assert np.abs(pair.even(x) + pair.odd(x) - U(x)).max() < 1e-12


@pytest.mark.parametrize("preset", ["identity", "diag4", "offdiag"])
def test_energy_decomposition_additivity(preset):
    A = coefficient_preset(preset, 2)
    base = exact_solution("regular", 2, nu=[1.0])
    U = poly(lambda x: base(x) + 0.3 * x[:, 1] + 0.2 * x[:, 0] * x[:, 1])
    pair = symmetrize(U, A, x0=[0.05, 0.0])
    out = energy_decomposition_audit(pair, 0.8 * pair.valid_radius)
    assert out["residual_mass"] < 1e-10
    assert out["residual_energy"] < 1e-10
    # both parts carry positive mass here
    assert out["mass"][1] > 0.0 and out["mass"][2] > 0.0


def test_quasisymmetry_of_symmetric_solution():
    # even solution with diagonal coefficients: Q = 1 up to quadrature
    A = coefficient_preset("diag4", 2)
    U = exact_solution("polynomial", 2, name="x1sq_minus_xnsq")
    samples = [([0.0, 0.0], 0.2), ([0.1, 0.0], 0.15), ([-0.2, 0.0], 0.1)]
    out = quasisymmetry_constant(U, A, samples)
    assert out["Q"] <= 1.0 + 1e-6
    assert not out["skipped"]


def test_quasisymmetry_of_constructed_asymmetry():
    # U = even + eps * odd with A(x0)-orthogonal parts of known energies:
    # ratio = 1 + eps^2 E_odd / E_even, checked against direct integration
    fr = deskew_frame(constant_field(np.eye(2)), np.zeros(2))
    eps = 2.0

    def U(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x[:, 0] ** 2 - x[:, 1] ** 2 + eps * x[:, 1] ** 3

    r = 0.4
    even = poly(lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)
    odd = poly(lambda x: eps * x[:, 1] ** 3)
    e_even = ellipsoid_energy(even, fr, r)
    e_odd = ellipsoid_energy(odd, fr, r)
    expect = 1.0 + e_odd / e_even
    out = quasisymmetry_constant(U, constant_field(np.eye(2)),
                                 [([0.0, 0.0], r)])
    assert abs(out["Q"] - expect) < 2e-2 * expect
    assert out["Q"] > 1.05


def test_quasisymmetry_skips_overlarge_radii():
    A = coefficient_preset("diag4", 2)
    U = exact_solution("polynomial", 2, name="x1sq_minus_xnsq")
    out = quasisymmetry_constant(U, A, [([0.0, 0.0], 0.9), ([0.0, 0.0], 0.2)])
    assert len(out["skipped"]) == 1
    assert out["skipped"][0][2] == "radius"


def test_counterexample_demo_values():
    out = counterexample_demo(deltas=(0.1, 0.01))
    d0 = out["deltas"][0]
    assert d0["competitor_energy"] == 0.0
    assert abs(d0["ustar_energy_half_interval"] - 0.1**3 / 12.0) < 1e-12
    assert abs(d0["ustar_energy_half_interval"]
               - d0["ustar_energy_closed_form"]) < 1e-15
    # the original u stays almost harmonic with vanishing excess
    for d in out["deltas"]:
        assert abs(d["u_excess_ratio"] - d["u_excess_bound"]) < 1e-12
    assert out["deltas"][1]["u_excess_ratio"] - 1.0 < 1e-4
