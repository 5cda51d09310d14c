"""Coefficient matrix fields and the per-point deskewing geometry.

A coefficient field A(x) is a symmetric uniformly elliptic n-by-n matrix
field.  For each point x0 we build a frame: the SPD square root
a = A(x0)^{1/2}, the Gram-Schmidt rotation O aligning the image of the thin
plane back onto itself, abar = a O, and (for x0 on the thin plane) the skewed
reflection P.  The affine map Tbar(x) = abar^{-1} (x - x0) sends the
ellipsoid E_r(x0) = a B_r + x0 to the ball B_r and the thin plane to itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DegenerateBasis,
    EllipticityViolated,
    NonSymmetric,
    NotSPD,
    ZeroVector,
)

_SYM_TOL = 1e-9


@dataclass(frozen=True)
class CoefficientField:
    """Matrix field A(x) with its ellipticity / Hoelder metadata.

    evaluator maps a point (length-n array) to an n-by-n symmetric matrix.
    lam <= 1 <= Lam are the ellipticity bounds, alpha the Hoelder exponent,
    M the master constant bounding ||A||_{C^{0,alpha}}, 1/lam, Lam and the
    gauge slope.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    n: int
    lam: float
    Lam: float
    alpha: float
    M: float
    name: str = "custom"

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if not (0.0 < self.lam <= 1.0 <= self.Lam):
            raise ValueError("need 0 < lam <= 1 <= Lam")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if 1.0 / self.lam > self.M + 1e-12 or self.Lam > self.M + 1e-12:
            raise ValueError("master constant M must dominate 1/lam and Lam")

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(x, dtype=float)),
                         dtype=float)
        if out.ndim == 3 and out.shape[0] == 1:
            out = out[0]
        return out

    def batch(self, pts) -> np.ndarray:
        """Evaluate at many points, shape (N, n) -> (N, n, n).

        Vectorized evaluators are used directly; scalar-only evaluators are
        looped over.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        N = pts.shape[0]
        try:
            out = np.asarray(self.evaluator(pts), dtype=float)
            if out.shape == (N, self.n, self.n):
                return out
            if out.shape == (self.n, self.n):
                return np.broadcast_to(out, (N, self.n, self.n))
        except Exception:
            pass
        return np.stack([self(p) for p in pts])


def constant_field(A, alpha: float = 0.5, M: float | None = None,
                   name: str = "constant") -> CoefficientField:
    """Wrap a constant matrix as a CoefficientField."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    lam, Lam = min(w[0], 1.0), max(w[-1], 1.0)
    if M is None:
        M = max(1.0 / lam, Lam, np.abs(A).max())
    return CoefficientField(lambda x, _A=A: _A, n, lam, Lam, alpha, M, name)


def matrix_sqrt(S) -> np.ndarray:
    """Symmetric square root of an SPD matrix via eigendecomposition."""
    S = np.asarray(S, dtype=float)
    if np.abs(S - S.T).max() > _SYM_TOL * max(1.0, np.abs(S).max()):
        raise NonSymmetric(None, float(np.abs(S - S.T).max()))
    w, V = np.linalg.eigh(S)
    if w[0] <= 0.0:
        raise NotSPD(f"matrix has a nonpositive eigenvalue {w[0]:.3e}")
    return (V * np.sqrt(w)) @ V.T


@dataclass(frozen=True)
class Frame:
    """Per-point deskewing data at x0.

    a = A(x0)^{1/2}, O the Gram-Schmidt rotation, abar = a O, and P the
    skewed reflection across the thin plane (only for x0 on the plane).
    """

    x0: np.ndarray
    a: np.ndarray
    O: np.ndarray
    abar: np.ndarray
    abar_inv: np.ndarray
    det_a: float
    P: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def A(self) -> np.ndarray:
        return self.a @ self.a

    def deskew(self, x) -> np.ndarray:
        """Tbar(x) = abar^{-1} (x - x0); maps E_r(x0) to B_r."""
        x = np.asarray(x, dtype=float)
        return (x - self.x0) @ self.abar_inv.T

    def reskew(self, y) -> np.ndarray:
        """Inverse of deskew: x = abar y + x0."""
        y = np.asarray(y, dtype=float)
        return y @ self.abar.T + self.x0


def deskew_frame(A: CoefficientField, x0) -> Frame:
    """Build the deskewing frame at x0.

    The rotation columns are the Gram-Schmidt frame of a^{-1}e_1 ...
    a^{-1}e_{n-1} followed by a e_n / |a e_n|; the reflection P is computed
    whenever x0 lies on the thin plane (last coordinate zero).
    """
    x0 = np.asarray(x0, dtype=float)
    n = A.n
    Amat = A(x0)
    a = matrix_sqrt(Amat)
    a_inv = np.linalg.inv(a)

    cols = []
    for i in range(n - 1):
        v = a_inv[:, i].copy()
        for u in cols:
            v -= np.dot(v, u) * u
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise DegenerateBasis(f"Gram-Schmidt pivot {i} collapsed at {x0}")
        cols.append(v / norm)
    en = a[:, n - 1]
    cols.append(en / np.linalg.norm(en))
    O = np.column_stack(cols)
    if np.linalg.det(O) < 0.0:
        # flip the first tangential vector to keep det O = +1
        O[:, 0] = -O[:, 0]

    abar = a @ O
    abar_inv = np.linalg.inv(abar)
    det_a = float(np.linalg.det(a))

    P = None
    if abs(x0[-1]) < 1e-14:
        en_std = np.zeros(n)
        en_std[-1] = 1.0
        P = np.eye(n) - 2.0 * np.outer(Amat[:, n - 1], en_std) / Amat[n - 1, n - 1]

    return Frame(x0=x0, a=a, O=O, abar=abar, abar_inv=abar_inv, det_a=det_a, P=P)


def conformal_factor(frame: Frame, z) -> float | np.ndarray:
    """mu(z) = |a^{-1} z| / |A^{-1} z|; lies in [lam^{1/2}, Lam^{1/2}]."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zz = np.atleast_2d(z)
    if np.any(np.linalg.norm(zz, axis=-1) == 0.0):
        raise ZeroVector("conformal factor undefined at z = 0")
    a_inv = np.linalg.inv(frame.a)
    A_inv = a_inv @ a_inv
    num = np.linalg.norm(zz @ a_inv.T, axis=-1)
    den = np.linalg.norm(zz @ A_inv.T, axis=-1)
    mu = num / den
    return float(mu[0]) if single else mu


@dataclass(frozen=True)
class Ellipsoid:
    """E_r(x0) = a B_r + x0."""

    x0: np.ndarray
    r: float
    frame: Frame

    def contains(self, x) -> np.ndarray:
        y = self.frame.deskew(x)
        return np.linalg.norm(np.atleast_2d(y), axis=-1) <= self.r

    def sample_boundary(self, directions) -> np.ndarray:
        """Map unit directions to points of the ellipsoid boundary."""
        d = np.asarray(directions, dtype=float)
        return self.frame.reskew(self.r * d)


@dataclass
class EllipticityReport:
    min_quotient: float
    max_quotient: float
    symmetry_residual: float
    holder_estimate: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_ellipticity(A: CoefficientField, samples, n_dirs: int = 16,
                         rng=None) -> EllipticityReport:
    """Check symmetry and the declared ellipticity bounds on sample points.

    Reports min/max Rayleigh quotients over random directions, the worst
    symmetry residual, and a pairwise empirical Hoelder seminorm estimate
    sup |A(x)-A(y)| / |x-y|^alpha.  The estimate never overwrites the
    declared M.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("need at least one sample point")
    rng = np.random.default_rng(rng if rng is not None else 0)
    n = A.n
    dirs = rng.standard_normal((n_dirs, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    qmin, qmax, sym_res = np.inf, -np.inf, 0.0
    violations = []
    mats = []
    for x in samples:
        Ax = A(x)
        mats.append(Ax)
        res = float(np.abs(Ax - Ax.T).max())
        sym_res = max(sym_res, res)
        if res > _SYM_TOL:
            raise NonSymmetric(x, res)
        for xi in dirs:
            q = float(xi @ Ax @ xi)
            qmin, qmax = min(qmin, q), max(qmax, q)
            if q < A.lam - 1e-9 or q > A.Lam + 1e-9:
                violations.append(EllipticityViolated(x, xi, q))

    holder = 0.0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            d = np.linalg.norm(samples[i] - samples[j])
            if d > 0.0:
                diff = float(np.linalg.norm(mats[i] - mats[j], ord=2))
                holder = max(holder, diff / d**A.alpha)

    return EllipticityReport(qmin, qmax, sym_res, holder, violations)


class FrameCache:
    """Read-only lookup of frames keyed by grid node index.

    Frequency scans revisit the same centers thousands of times; frames are
    immutable so the cache is safe to share.
    """

    def __init__(self, A: CoefficientField):
        self.A = A
        self._cache: dict[tuple, Frame] = {}

    def at(self, x0) -> Frame:
        key = tuple(np.round(np.asarray(x0, dtype=float), 12))
        fr = self._cache.get(key)
        if fr is None:
            fr = deskew_frame(self.A, x0)
            self._cache[key] = fr
        return fr
