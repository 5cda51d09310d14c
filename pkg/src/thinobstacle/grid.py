"""Uniform Cartesian grids containing the thin plane, and sampled fields.

The grid covers the box [-1,1]^n with an odd node count per axis, so the
plane x_n = 0 is exactly a grid plane.  Scalar fields carry node values and
are evaluable anywhere in the box by multilinear interpolation; gradients
near the thin plane always use one-sided stencils from the correct
half-space, because the normal derivative jumps there.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomain

_MAGIC = b"SGF1"
_EPS = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-1,1]^n with m (odd) nodes per axis."""

    n: int
    m: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.m < 3 or self.m % 2 == 0:
            raise ValueError("node count per axis must be odd and >= 3")

    @property
    def h(self) -> float:
        return 2.0 / (self.m - 1)

    @property
    def k_plane(self) -> int:
        """Index of the thin plane x_n = 0 along the last axis."""
        return (self.m - 1) // 2

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.m)

    @property
    def shape(self) -> tuple:
        return (self.m,) * self.n

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (m^n, n), row-major."""
        ax = self.axis
        mesh = np.meshgrid(*([ax] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def thin_nodes(self) -> np.ndarray:
        """Coordinates of the thin-plane nodes, shape (m^{n-1}, n)."""
        ax = self.axis
        mesh = np.meshgrid(*([ax] * (self.n - 1)), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        return np.hstack([pts, np.zeros((pts.shape[0], 1))])

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all(np.abs(x) <= 1.0 + _EPS, axis=-1)


@dataclass
class ScalarField:
    """Node values of a scalar field on a grid, with a provenance tag."""

    grid: Grid
    values: np.ndarray
    meta: str = "exact"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def __call__(self, x) -> np.ndarray | float:
        return sample(self, x)

    def gradient(self, x, side=None) -> np.ndarray:
        return one_sided_gradient(self, x, side)

    def thin_values(self) -> np.ndarray:
        """Values restricted to the thin plane, shape (m,)*(n-1)."""
        return np.take(self.values, self.grid.k_plane, axis=-1)

    def scale(self) -> float:
        return float(np.abs(self.values).max())


def sample(f: ScalarField, x):
    """Multilinear interpolation; exact for multilinear fields and at nodes."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    g = f.grid
    if not np.all(np.abs(pts) <= 1.0 + _EPS):
        bad = pts[~np.all(np.abs(pts) <= 1.0 + _EPS, axis=-1)][0]
        raise OutOfDomain(f"point {bad} outside the box")
    t = (np.clip(pts, -1.0, 1.0) + 1.0) / g.h
    i0 = np.clip(np.floor(t).astype(np.int64), 0, g.m - 2)
    w = t - i0

    vals = np.zeros(pts.shape[0])
    flat = f.values.ravel()
    strides = np.array([g.m**k for k in range(g.n - 1, -1, -1)], dtype=np.int64)
    base = i0 @ strides
    for corner in range(2**g.n):
        bits = [(corner >> (g.n - 1 - d)) & 1 for d in range(g.n)]
        weight = np.ones(pts.shape[0])
        offset = 0
        for d, b in enumerate(bits):
            weight *= w[:, d] if b else (1.0 - w[:, d])
            offset += b * strides[d]
        vals += weight * flat[base + offset]
    return float(vals[0]) if single else vals


def one_sided_gradient(f, x, side=None, h: float | None = None):
    """Gradient of an evaluable field by finite differences.

    Tangential components use central differences; the normal component
    never differences across the thin plane: within one step of it, a
    second-order one-sided stencil from the requested (or current)
    half-space is used.  `f` only needs to be callable on points.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if h is None:
        h = f.grid.h if isinstance(f, ScalarField) else 1e-6
    n = pts.shape[1]
    grad = np.zeros_like(pts)

    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        if d < n - 1:
            # shift the stencil inward near the box faces
            hi = pts[:, d] > 1.0 - h - _EPS
            lo = pts[:, d] < -1.0 + h + _EPS
            mid = ~(hi | lo)
            if np.any(mid):
                grad[mid, d] = (_ev(f, pts[mid] + e) - _ev(f, pts[mid] - e)) / (2 * h)
            for mask, s in ((hi, -1.0), (lo, 1.0)):
                if np.any(mask):
                    p = pts[mask]
                    grad[mask, d] = s * (
                        -3.0 * _ev(f, p) + 4.0 * _ev(f, p + s * e) - _ev(f, p + 2 * s * e)
                    ) / (2 * h)
        else:
            xn = pts[:, d]
            if side == "+":
                s = np.ones_like(xn)
            elif side == "-":
                s = -np.ones_like(xn)
            else:
                s = np.where(xn >= 0.0, 1.0, -1.0)
            s = np.where(xn * s >= 1.0 - h - _EPS, -s, s)  # stay inside the box
            central = (xn * s >= h - _EPS) & (np.abs(xn) <= 1.0 - h + _EPS)
            if np.any(central):
                p = pts[central]
                grad[central, d] = (_ev(f, p + e) - _ev(f, p - e)) / (2 * h)
            rest = ~central
            if np.any(rest):
                p = pts[rest]
                sr = s[rest][:, None] * e
                grad[rest, d] = s[rest] * (
                    -3.0 * _ev(f, p) + 4.0 * _ev(f, p + sr) - _ev(f, p + 2 * sr)
                ) / (2 * h)
    return grad[0] if single else grad


def _ev(f, pts):
    return np.asarray(f(pts), dtype=float)


def write_sgf1(path, f: ScalarField) -> None:
    """Write the normative SGF1 binary layout (little-endian)."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", 1, g.n, g.m))
        bounds = []
        for _ in range(g.n):
            bounds.extend([-1.0, 1.0])
        fh.write(struct.pack(f"<{2 * g.n}d", *bounds))
        fh.write(f.values.astype("<f8").tobytes(order="C"))


def read_sgf1(path) -> ScalarField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        version, n, m = struct.unpack("<III", fh.read(12))
        if version != 1:
            raise ValueError(f"unsupported SGF1 version {version}")
        bounds = struct.unpack(f"<{2 * n}d", fh.read(16 * n))
        for k in range(n):
            if bounds[2 * k] != -1.0 or bounds[2 * k + 1] != 1.0:
                raise ValueError("only the box [-1,1]^n is supported")
        raw = np.frombuffer(fh.read(8 * m**n), dtype="<f8")
        g = Grid(n, m)
        return ScalarField(g, raw.reshape(g.shape).copy(), meta="loaded")
