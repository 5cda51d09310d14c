"""Named coefficient fields, boundary-data formulas and drift specs.

Preset names accept an optional seed suffix, e.g. ``var_diag:3``.  Variable
presets are smooth trigonometric perturbations with ellipticity bounds
measured numerically at build time (with margin) rather than declared
optimistically.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .coeffs import CoefficientField
from .errors import ConfigError, UnknownKind
from .exact import HalfSpaceSolution, exact_solution

__all__ = [
    "coefficient_preset",
    "boundary_data",
    "drift_spec",
    "COEFF_PRESETS",
]

COEFF_PRESETS = ("identity", "diag4", "offdiag", "var_iso", "var_diag",
                 "var_full")


def _measure_bounds(evaluator, n, probes=500, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(probes, n))
    mats = np.asarray(evaluator(pts))
    w = np.linalg.eigvalsh(mats)
    lam = float(w[:, 0].min())
    Lam = float(w[:, -1].max())
    # crude Hoelder seminorm estimate over random pairs, alpha = 1/2
    qts = rng.uniform(-1.0, 1.0, size=(probes, n))
    m2 = np.asarray(evaluator(qts))
    dist = np.linalg.norm(pts - qts, axis=1)
    keep = dist > 1e-6
    diff = np.linalg.norm((mats - m2)[keep], axis=(1, 2))
    hold = float((diff / dist[keep] ** 0.5).max()) if keep.any() else 0.0
    return lam, Lam, hold


def _trig_profiles(rng, count):
    ks = rng.integers(1, 3, size=(count, 3)).astype(float)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    amps = rng.uniform(0.1, 0.2, size=count)
    return ks, phases, amps


def _wave(pts, k, phase, amp):
    n = pts.shape[-1]
    return amp * np.sin(pts @ k[:n] + phase)


@lru_cache(maxsize=64)
def coefficient_preset(name: str, n: int) -> CoefficientField:
    """Build a named coefficient field; 'name' or 'name:seed'."""
    base, _, seedpart = name.partition(":")
    seed = int(seedpart) if seedpart else 0
    rng = np.random.default_rng(seed + 1000)

    if base == "identity":
        A = np.eye(n)
        return CoefficientField(lambda x, _A=A: _broadcast(_A, x), n,
                                1.0, 1.0, 0.5, 1.0, name)
    if base == "diag4":
        A = np.diag([4.0] + [1.0] * (n - 1))
        return CoefficientField(lambda x, _A=A: _broadcast(_A, x), n,
                                1.0, 4.0, 0.5, 4.0, name)
    if base == "offdiag":
        if n == 2:
            A = np.array([[1.0, 0.5], [0.5, 1.0]])
        else:
            A = np.array([[1.0, 0.3, 0.0],
                          [0.3, 1.0, 0.2],
                          [0.0, 0.2, 1.0]])
        w = np.linalg.eigvalsh(A)
        lam = min(float(w[0]), 1.0)
        Lam = max(float(w[-1]), 1.0)
        return CoefficientField(lambda x, _A=A: _broadcast(_A, x), n,
                                lam, Lam, 0.5, max(1.0 / lam, Lam), name)

    if base == "var_iso":
        k, ph, amp = _trig_profiles(rng, 1)

        def ev(x, k=k[0], ph=ph[0], amp=amp[0], n=n):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            a = 1.0 + _wave(x, k, ph, amp)
            out = np.zeros((len(x), n, n))
            for d in range(n):
                out[:, d, d] = a
            return out
    elif base == "var_diag":
        k, ph, amp = _trig_profiles(rng, n)

        def ev(x, k=k, ph=ph, amp=amp, n=n):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            out = np.zeros((len(x), n, n))
            for d in range(n):
                out[:, d, d] = 1.0 + _wave(x, k[d], ph[d], amp[d])
            return out
    elif base == "var_full":
        k, ph, amp = _trig_profiles(rng, n + n * (n - 1) // 2)

        def ev(x, k=k, ph=ph, amp=amp, n=n):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            out = np.zeros((len(x), n, n))
            for d in range(n):
                out[:, d, d] = 1.0 + _wave(x, k[d], ph[d], amp[d])
            j = n
            for d in range(n):
                for e in range(d + 1, n):
                    # keep off-diagonals small so SPD is safe by dominance
                    off = 0.5 * _wave(x, k[j], ph[j], amp[j])
                    out[:, d, e] = off
                    out[:, e, d] = off
                    j += 1
            return out
    else:
        raise UnknownKind(f"unknown coefficient preset {base!r}")

    lam, Lam, hold = _measure_bounds(ev, n, seed=seed)
    lam = min(lam * 0.98, 1.0)
    Lam = max(Lam * 1.02, 1.0)
    M = max(1.0 / lam, Lam, 1.1 * hold)
    return CoefficientField(ev, n, lam, Lam, 0.5, M, name)


def _broadcast(A, x):
    x = np.asarray(x)
    if x.ndim <= 1:
        return A
    return np.broadcast_to(A, (len(x),) + A.shape)


class _Humps:
    """Sum of away-facing 3/2 profiles plus an optional even dimple.

    Even in x_n; nonnegative contact forms where the dimple pushes the
    data down to zero on the thin plane.
    """

    def __init__(self, n, centers, signs, amps, dimple=0.0,
                 dimple_center=0.0, dimple_width=0.45):
        self.parts = [
            HalfSpaceSolution(kappa=1.5, nu=[s] + [0.0] * (n - 2),
                              amplitude=a,
                              x0=[c] + [0.0] * (n - 1))
            for c, s, a in zip(centers, signs, amps)
        ]
        self.n = n
        self.dimple = float(dimple)
        self.dc = float(dimple_center)
        self.dw = float(dimple_width)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        for p in self.parts:
            out = out + p(x)
        if self.dimple:
            r2 = (x[:, 0] - self.dc) ** 2 / self.dw**2
            out = out - self.dimple * np.exp(-r2) \
                * np.exp(-(x[:, -1] / self.dw) ** 2)
        return out


class _HarmonicWells:
    """Harmonic extension of the double-well quartic
    P(t) = s (t^2 - a^2)(t^2 - b^2) + c0 + tilt * t.

    The extension P(x_1) - P''(x_1) x_n^2 / 2 + s x_n^4 is exactly
    harmonic (for A = I) and even in x_n.  Its trace on the thin plane is
    P itself: negative on the two bands a < |x_1| < b (for suitable s,
    c0), positive near the center and the edges.  The constrained
    solution develops two separated contact bands with four free-boundary
    points, and the construction is robust to moderate coefficient
    variation because the wall values stay polynomially bounded.
    """

    def __init__(self, a=0.35, b=0.75, s=15.0, c0=0.3, tilt=0.0):
        self.a, self.b, self.s = float(a), float(b), float(s)
        self.c0, self.tilt = float(c0), float(tilt)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t, xn = x[:, 0], x[:, -1]
        a2, b2, s = self.a**2, self.b**2, self.s
        P = s * (t**2 - a2) * (t**2 - b2) + self.c0 + self.tilt * t
        P2 = s * (12.0 * t**2 - 2.0 * (a2 + b2))
        return P - 0.5 * P2 * xn**2 + s * xn**4


def boundary_data(kind: str, n: int, **params):
    """Boundary-trace formulas by name.

    kinds: 'constant' (value), 'regular' / 'super' / 'polynomial'
    (exact-solution traces, same params as exact_solution), 'humps'
    (multi-profile data with optional dimple, for manufactured contact),
    'wells' (harmonic double-well quartic carving two contact bands).
    """
    if kind == "constant":
        value = float(params.get("value", 0.0))
        return lambda x, v=value: np.full(np.atleast_2d(x).shape[0], v)
    if kind in ("regular", "super", "polynomial"):
        return exact_solution(kind, n=n, **params)
    if kind == "wells":
        return _HarmonicWells(a=params.get("a", 0.35),
                              b=params.get("b", 0.75),
                              s=params.get("s", 15.0),
                              c0=params.get("c0", 0.3),
                              tilt=params.get("tilt", 0.0))
    if kind == "humps":
        # profiles facing outward leave a contact band between the centers
        centers = params.get("centers", (-0.55, 0.55))
        signs = params.get("signs", (-1.0, 1.0))
        amps = params.get("amps", (1.0,) * len(centers))
        return _Humps(n, centers, signs, amps,
                      dimple=params.get("dimple", 0.0),
                      dimple_center=params.get("dimple_center", 0.0),
                      dimple_width=params.get("dimple_width", 0.45))
    raise UnknownKind(f"unknown boundary data kind {kind!r}")


def drift_spec(spec, n: int):
    """Drift vector fields: None, 'constant:b1,...,bn', or a callable."""
    if isinstance(spec, (tuple, list)):
        # config values with commas parse as tuples; rejoin them
        spec = ",".join(str(v) for v in spec)
    if spec in (None, "", "0", "none"):
        return None
    if callable(spec):
        return spec
    if isinstance(spec, str) and spec.startswith("constant:"):
        vec = np.array([float(v) for v in spec.split(":", 1)[1].split(",")])
        if len(vec) != n:
            raise ConfigError(f"drift vector has {len(vec)} components, need {n}")
        return lambda x, b=vec: np.broadcast_to(
            b, (np.atleast_2d(x).shape[0], n))
    raise ConfigError(f"cannot parse drift spec {spec!r}")
