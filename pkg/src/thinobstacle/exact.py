"""Closed-form solutions used as oracles and boundary data.

Two families:

* half-space profiles a Re(z' . nu + i |z_n|)^kappa for kappa in {3/2, 7/2},
  optionally precomposed with a constant skew abar^{-1}(x - x0);
* even homogeneous harmonic polynomials, including a basis generator for any
  even degree.

Both expose analytic one-sided gradients, so functional audits on exact
fields are not limited by finite-difference error.
"""

from __future__ import annotations

from itertools import product as _iproduct

import numpy as np

from .coeffs import CoefficientField, constant_field, deskew_frame
from .errors import UnknownKind
from .grid import Grid, ScalarField

__all__ = [
    "HalfSpaceSolution",
    "PolyField",
    "harmonic_basis",
    "named_polynomial",
    "exact_solution",
    "exact_solution_field",
]


class HalfSpaceSolution:
    """a Re(w)^kappa with w = z' . nu + i |z_n|, z = abar^{-1}(x - x0).

    For kappa = 3/2 this is the regular half-space solution with free
    boundary {z' . nu = 0, z_n = 0} and contact set {z' . nu <= 0}; for
    kappa = 7/2 the next profile in the same family.  Positive on the thin
    plane where z' . nu > 0, zero where z' . nu <= 0.
    """

    def __init__(self, kappa: float = 1.5, nu=None, amplitude: float = 1.0,
                 x0=None, abar=None, n: int | None = None):
        if n is None:
            n = 2 if nu is None else np.asarray(nu).size + 1
        if nu is None:
            nu = np.zeros(n - 1)
            nu[0] = 1.0
        nu = np.asarray(nu, dtype=float)
        nrm = np.linalg.norm(nu)
        if nrm == 0.0:
            raise ValueError("nu must be a nonzero thin-space direction")
        self.nu = nu / nrm
        self.kappa = float(kappa)
        self.amplitude = float(amplitude)
        self.n = n
        self.x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
        self.abar = None if abar is None else np.asarray(abar, dtype=float)
        self._abar_invT = None if abar is None else np.linalg.inv(self.abar).T

    def _z(self, x):
        z = np.asarray(x, dtype=float) - self.x0
        if self.abar is not None:
            z = np.linalg.solve(self.abar, np.atleast_2d(z).T).T
            z = z.reshape(np.shape(x))
        return z

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(self._z(x))
        w = z[:, :-1] @ self.nu + 1j * np.abs(z[:, -1])
        vals = self.amplitude * np.real(w**self.kappa)
        return float(vals[0]) if single else vals

    def gradient(self, x, side=None):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(self._z(x))
        s = z[:, :-1] @ self.nu
        t = np.abs(z[:, -1])
        w = s + 1j * t
        dw = self.kappa * w ** (self.kappa - 1.0)
        dds = np.real(dw)
        ddt = -np.imag(dw)
        if side == "+":
            sgn = np.ones(len(z))
        elif side == "-":
            sgn = -np.ones(len(z))
        else:
            sgn = np.where(z[:, -1] >= 0.0, 1.0, -1.0)
        g = np.zeros_like(z)
        g[:, :-1] = dds[:, None] * self.nu[None, :]
        g[:, -1] = ddt * sgn
        g *= self.amplitude
        if self.abar is not None:
            g = g @ self._abar_invT.T  # chain rule through z = abar^{-1}(x-x0)
        return g[0] if single else g


class PolyField:
    """Polynomial sum c_k prod_d z_d^{e_kd}, z = abar^{-1}(x - x0)."""

    def __init__(self, exponents, coeffs, x0=None, abar=None):
        self.exponents = np.asarray(exponents, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.exponents.ndim != 2 or len(self.coeffs) != len(self.exponents):
            raise ValueError("exponents (K, n) and coeffs (K,) must align")
        self.n = self.exponents.shape[1]
        self.x0 = np.zeros(self.n) if x0 is None else np.asarray(x0, dtype=float)
        self.abar = None if abar is None else np.asarray(abar, dtype=float)
        self._abar_invT = None if abar is None else np.linalg.inv(self.abar).T

    def _z(self, x):
        z = np.asarray(x, dtype=float) - self.x0
        if self.abar is not None:
            z = np.atleast_2d(z) @ self._abar_invT
            z = z.reshape(np.shape(x))
        return z

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(self._z(x))
        mono = np.prod(z[:, None, :] ** self.exponents[None, :, :], axis=2)
        vals = mono @ self.coeffs
        return float(vals[0]) if single else vals

    def gradient(self, x, side=None):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(self._z(x))
        g = np.zeros_like(z)
        for d in range(self.n):
            ed = self.exponents[:, d]
            keep = ed > 0
            if not np.any(keep):
                continue
            ex = self.exponents[keep].copy()
            ex[:, d] -= 1
            mono = np.prod(z[:, None, :] ** ex[None, :, :], axis=2)
            g[:, d] = mono @ (self.coeffs[keep] * ed[keep])
        if self.abar is not None:
            g = g @ self._abar_invT.T
        return g[0] if single else g


def _monomials(n: int, degree: int, even_last: bool) -> list[tuple]:
    out = []
    for e in _iproduct(range(degree + 1), repeat=n):
        if sum(e) == degree and (not even_last or e[-1] % 2 == 0):
            out.append(e)
    return out


def harmonic_basis(n: int, degree: int) -> list[PolyField]:
    """Orthonormal coefficient basis of harmonic homogeneous polynomials of
    the given even degree that are even in the last coordinate.

    Computed as the SVD null space of the Laplacian acting on monomial
    coefficients.
    """
    if degree < 2 or degree % 2 == 1:
        raise ValueError("degree must be even and >= 2")
    src = _monomials(n, degree, even_last=True)
    dst = _monomials(n, degree - 2, even_last=True)
    dst_index = {e: i for i, e in enumerate(dst)}
    D = np.zeros((len(dst), len(src)))
    for j, e in enumerate(src):
        for d in range(n):
            if e[d] >= 2:
                tgt = tuple(e[k] - 2 * (k == d) for k in range(n))
                D[dst_index[tgt], j] += e[d] * (e[d] - 1)
    _, sv, Vt = np.linalg.svd(D)
    rank = int(np.sum(sv > 1e-10 * (sv[0] if len(sv) else 1.0)))
    null = Vt[rank:].T  # columns: orthonormal null vectors
    exps = np.asarray(src, dtype=np.int64)
    return [PolyField(exps, null[:, k]) for k in range(null.shape[1])]


_NAMED = {
    # x_1^2 - x_n^2: harmonic, even in x_n, equals x_1^2 >= 0 on the thin
    # plane; the basic singular model.  In n=2 the common spelling is
    # x_1^2 - x_2^2, so both names resolve to the same field there.
    "x1sq_minus_xnsq": lambda n: PolyField(
        [(2,) + (0,) * (n - 1), (0,) * (n - 1) + (2,)], [1.0, -1.0]),
    # x_1^2 - x_2^2 read literally; in n=3 this is independent of x_3 and
    # sign-changing on the thin plane (useful as a d=1 test in n=3 only
    # with the normal relabeled).
    "x1sq_minus_x2sq": lambda n: PolyField(
        [(2,) + (0,) * (n - 1), (0, 2) + (0,) * (n - 2)], [1.0, -1.0]),
}


def named_polynomial(name: str, n: int) -> PolyField:
    try:
        return _NAMED[name](n)
    except KeyError:
        raise UnknownKind(f"unknown polynomial {name!r}") from None


def _abar_from(A, n):
    if A is None:
        return None
    field = A if isinstance(A, CoefficientField) else constant_field(np.asarray(A, dtype=float))
    frame = deskew_frame(field, np.zeros(n))
    return frame.abar


def exact_solution(kind: str, n: int = 2, **params):
    """Build an analytic exact solution.

    kind: 'regular' (kappa=3/2), 'super' (kappa=7/2), 'polynomial'
    (named or explicit exponents/coeffs).  Optional params: nu, amplitude,
    x0, and either abar or a constant matrix A to skew with.
    """
    abar = params.pop("abar", None)
    if abar is None:
        abar = _abar_from(params.pop("A", None), n)
    else:
        params.pop("A", None)
    if kind == "regular":
        return HalfSpaceSolution(kappa=1.5, n=n, abar=abar, **params)
    if kind == "super":
        return HalfSpaceSolution(kappa=3.5, n=n, abar=abar, **params)
    if kind == "polynomial":
        x0 = params.get("x0")
        name = params.get("name")
        if name is not None:
            base = named_polynomial(name, n)
            return PolyField(base.exponents,
                             params.get("amplitude", 1.0) * base.coeffs,
                             x0=x0, abar=abar)
        return PolyField(params["exponents"], params["coeffs"], x0=x0, abar=abar)
    raise UnknownKind(f"unknown exact solution kind {kind!r}")


def exact_solution_field(kind: str, grid: Grid, **params) -> ScalarField:
    """Sample an analytic exact solution onto a grid."""
    sol = exact_solution(kind, n=grid.n, **params)
    vals = np.asarray(sol(grid.nodes()), dtype=float).reshape(grid.shape)
    return ScalarField(grid, vals, meta="exact")
