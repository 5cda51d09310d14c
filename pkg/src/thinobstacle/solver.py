"""Discretization and solution of the thin-obstacle variational inequality.

The operator comes from the discrete energy

    E(u) = sum_faces h^{n-2} a_dd(face) (du)^2
         + sum_cells 2 a_de(center) h^{n-2} (g_d u)(g_e u) / 4^{n-1}

where g_d u is the cell-averaged difference in direction d.  Stationarity
of E/2 divided by h^n gives a finite-difference operator L that reduces to
the standard stencils for constant coefficients.  An optional drift term
<b, grad u> is added with first-order upwinding on rows off the thin plane.

The unilateral constraint u >= 0 is enforced on the thin-plane nodes by
projected SOR; nodes are swept color by color (2^n colors by index parity),
which makes the vectorized fallback match the sequential compiled kernel.
A brute-force active-set LCP enumeration serves as the solver oracle on
tiny grids.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeffs import CoefficientField, Frame
from .errors import (
    EllipsoidExceedsDomain,
    NoFeasibleActiveSet,
    NotMMatrix,
    TooManyThinNodes,
    ZeroReplacementEnergy,
)
from .fields import DeskewedField, gradient_of
from .grid import Grid, ScalarField
from .kernels import get_sweeper
from .quadrature import ball_rule, valid_radius

__all__ = [
    "SignoriniProblem",
    "DiscreteOperator",
    "Solution",
    "assemble",
    "solve_psor",
    "brute_force_lcp",
    "signorini_replacement",
    "almost_min_audit",
]


@dataclass
class SignoriniProblem:
    """Continuous problem data: coefficients, grid, boundary trace, drift.

    boundary maps points (..., n) to values; drift (optional) maps points
    to vectors (..., n), with integrability exponent p > n recorded for the
    gauge of the almost-minimizer construction.
    """

    A: CoefficientField
    grid: Grid
    boundary: object
    drift: object | None = None
    drift_p: float = 10.0
    name: str = "problem"

    def __post_init__(self):
        if self.A.n != self.grid.n:
            raise ValueError("coefficient field and grid dimension mismatch")
        if self.drift is not None and self.drift_p <= self.grid.n:
            raise ValueError("drift integrability exponent must exceed n")


@dataclass
class DiscreteOperator:
    """Assembled CSR operator with its symmetric (driftless) part.

    L rows are in finite-difference scale (O(1/h^2)); boundary rows are
    identity.  `interior` / `thin` are flat node index arrays; `order` is
    the interior sweep order grouped by color, with `color_slices` marking
    each color's extent.
    """

    grid: Grid
    L: sp.csr_matrix
    L_sym: sp.csr_matrix
    rhs: np.ndarray
    interior: np.ndarray
    boundary_idx: np.ndarray
    thin: np.ndarray
    order: np.ndarray
    color_slices: list
    clamp: np.ndarray
    diag: np.ndarray
    mmatrix_ok: bool

    def residual(self, x: np.ndarray, symmetric: bool = False) -> np.ndarray:
        L = self.L_sym if symmetric else self.L
        return L @ x - self.rhs


@dataclass
class Solution:
    """PSOR output: the field plus convergence and complementarity data."""

    field: ScalarField
    problem: SignoriniProblem
    op: DiscreteOperator
    iterations: int
    final_update: float
    converged: bool
    tol: float
    complementarity: dict = field(default_factory=dict)

    def scale(self) -> float:
        return self.field.scale()


def _flat_index_grid(g: Grid) -> np.ndarray:
    return np.arange(g.m**g.n, dtype=np.int64).reshape(g.shape)


def _interior_mask(g: Grid) -> np.ndarray:
    mask = np.ones(g.shape, dtype=bool)
    for d in range(g.n):
        sl = [slice(None)] * g.n
        for edge in (0, g.m - 1):
            sl[d] = edge
            mask[tuple(sl)] = False
    return mask


def assemble(problem: SignoriniProblem) -> DiscreteOperator:
    """Build the CSR operator, right-hand side and sweep schedule."""
    g = problem.grid
    n, m, h = g.n, g.m, g.h
    idx = _flat_index_grid(g)
    N = m**n
    nodes = g.nodes()

    rows, cols, vals = [], [], []

    # diagonal part: one face between i and i+e_d per axis, coefficient
    # sampled at the face midpoint, entries a/h^2
    for d in range(n):
        sl_lo = [slice(None)] * n
        sl_lo[d] = slice(0, m - 1)
        i_lo = idx[tuple(sl_lo)].ravel()
        mid = nodes[i_lo].copy()
        mid[:, d] += 0.5 * h
        a = problem.A.batch(mid)[:, d, d] / h**2
        i_hi = i_lo + idx.strides[d] // idx.itemsize
        rows += [i_lo, i_hi, i_lo, i_hi]
        cols += [i_lo, i_hi, i_hi, i_lo]
        vals += [a, a, -a, -a]

    # mixed part: cell-centered energy with cell-averaged gradients
    strides = np.array([m**k for k in range(n - 1, -1, -1)], dtype=np.int64)
    sl_cell = tuple(slice(0, m - 1) for _ in range(n))
    base = idx[sl_cell].ravel()
    centers = nodes[base] + 0.5 * h
    Acells = problem.A.batch(centers)
    corners = np.array(
        [[(c >> (n - 1 - d)) & 1 for d in range(n)] for c in range(2**n)])
    signs = 2.0 * corners - 1.0  # signs[c, d] = +1 if corner bit d set
    offsets = corners @ strides
    for d in range(n):
        for e in range(d + 1, n):
            ade = Acells[:, d, e]
            if np.abs(ade).max() < 1e-14:
                continue
            for p in range(2**n):
                for q in range(2**n):
                    coef = (signs[p, d] * signs[q, e] + signs[p, e] * signs[q, d])
                    if coef == 0.0:
                        continue
                    rows.append(base + offsets[p])
                    cols.append(base + offsets[q])
                    vals.append(ade * coef / (4.0 ** (n - 1) * h**2))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)

    interior_mask = _interior_mask(g)
    interior = idx[interior_mask].ravel()
    boundary_idx = idx[~interior_mask].ravel()
    is_interior = interior_mask.ravel()

    # drop boundary rows, then add identity there
    keep = is_interior[rows]
    L_sym = sp.csr_matrix(
        (np.concatenate([vals[keep], np.ones(len(boundary_idx))]),
         (np.concatenate([rows[keep], boundary_idx]),
          np.concatenate([cols[keep], boundary_idx]))),
        shape=(N, N))
    L_sym.sum_duplicates()

    thin_mask = np.zeros(g.shape, dtype=bool)
    sl = [slice(None)] * n
    sl[-1] = g.k_plane
    thin_mask[tuple(sl)] = True
    thin = idx[thin_mask & interior_mask].ravel()

    if problem.drift is not None:
        drift_rows_mask = interior_mask & ~thin_mask
        dr = idx[drift_rows_mask].ravel()
        b = np.asarray(problem.drift(nodes[dr]), dtype=float).reshape(len(dr), n)
        drows, dcols, dvals = [], [], []
        for d in range(n):
            bd = b[:, d]
            stride = strides[d]
            up = bd > 0.0
            dn = bd < 0.0
            # b_d > 0: b_d (u_i - u_{i-e_d}) / h ; b_d < 0 mirrored
            drows += [dr[up], dr[up], dr[dn], dr[dn]]
            dcols += [dr[up], dr[up] - stride, dr[dn], dr[dn] + stride]
            dvals += [bd[up] / h, -bd[up] / h, -bd[dn] / h, bd[dn] / h]
        L = L_sym + sp.csr_matrix(
            (np.concatenate(dvals),
             (np.concatenate(drows), np.concatenate(dcols))), shape=(N, N))
        L = L.tocsr()
    else:
        L = L_sym

    L.sum_duplicates()
    L.sort_indices()
    L_sym.sort_indices()

    diag = L.diagonal().copy()
    if np.any(diag[interior] <= 0.0):
        raise ValueError("nonpositive diagonal in assembled operator")

    # M-matrix check on interior rows
    Lcoo = L.tocoo()
    off = (Lcoo.row != Lcoo.col) & is_interior[Lcoo.row]
    worst = float(Lcoo.data[off].max(initial=0.0))
    mmatrix_ok = worst <= 1e-12 * max(1.0, float(diag.max()))
    if not mmatrix_ok:
        warnings.warn(
            f"assembled operator is not an M-matrix (worst off-diagonal "
            f"{worst:.3e}); projected SOR convergence is not guaranteed",
            NotMMatrix)

    rhs = np.zeros(N)
    rhs[boundary_idx] = np.asarray(problem.boundary(nodes[boundary_idx]),
                                   dtype=float)

    # 2^n-coloring by index parity: same-color nodes are never neighbors
    # for any stencil contained in {-1,0,1}^n
    multi = np.stack(np.unravel_index(interior, g.shape), axis=-1)
    color = (multi % 2) @ (2 ** np.arange(n))
    order_parts, color_slices, pos = [], [], 0
    for c in range(2**n):
        part = interior[color == c]
        order_parts.append(part)
        color_slices.append((pos, pos + len(part)))
        pos += len(part)
    order = np.concatenate(order_parts)

    clamp = np.zeros(N, dtype=np.uint8)
    clamp[thin] = 1

    return DiscreteOperator(
        grid=g, L=L, L_sym=L_sym, rhs=rhs, interior=interior,
        boundary_idx=boundary_idx, thin=thin, order=order,
        color_slices=color_slices, clamp=clamp, diag=diag,
        mmatrix_ok=mmatrix_ok)


def _initial_guess(op: DiscreteOperator, warm_start: bool) -> np.ndarray:
    x = op.rhs.copy()  # boundary values; zero elsewhere
    if warm_start:
        try:
            x = spla.spsolve(op.L.tocsc(), op.rhs)
        except Exception:
            x = op.rhs.copy()
        x[op.thin] = np.maximum(x[op.thin], 0.0)
    return x


def _complementarity_report(op: DiscreteOperator, x: np.ndarray,
                            tol: float) -> dict:
    """Per-thin-node value, normalized residual and flux jump.

    The residual uses the symmetric (driftless) part of the operator; the
    normalized form r_i / L_ii is in solution units and is the quantity
    bounded by the sweep tolerance, while J = h * r_i approximates the
    physical flux jump across the plane.
    """
    r = op.residual(x, symmetric=True)[op.thin]
    norm = r / op.diag[op.thin]
    u = x[op.thin]
    scale = float(np.abs(x).max()) or 1.0
    return {
        "thin_index": op.thin,
        "value": u,
        "residual": norm,
        "flux_jump": op.grid.h * r,
        "product": u * norm,
        "max_violation_value": float(max(0.0, -(u.min() if len(u) else 0.0))),
        "max_violation_flux": float(max(0.0, -(norm.min() if len(norm) else 0.0))),
        "max_product": float(np.abs(u * norm).max() if len(u) else 0.0),
        "ok": bool(
            (len(u) == 0)
            or ((u.min() >= -1e-14)
                and (norm.min() >= -10.0 * tol)
                and (np.abs(u * norm).max() <= 10.0 * tol * scale))),
    }


def solve_psor(problem: SignoriniProblem, tol: float = 1e-10,
               max_iter: int = 200_000, relax: float = 1.5,
               backend: str | None = None, warm_start: bool = True,
               op: DiscreteOperator | None = None,
               x0: np.ndarray | None = None) -> Solution:
    """Projected SOR solve of the discrete variational inequality.

    Converged when the largest node update stays below tol on two
    consecutive sweeps.  On max_iter the best iterate is returned flagged
    as not converged.
    """
    if not (0.0 < relax < 2.0):
        raise ValueError("relaxation parameter must lie in (0, 2)")
    if op is None:
        op = assemble(problem)
    name, sweep = get_sweeper(backend)

    x = x0.copy() if x0 is not None else _initial_guess(op, warm_start)
    x[op.thin] = np.maximum(x[op.thin], 0.0)

    indptr = op.L.indptr.astype(np.int32)
    indices = op.L.indices.astype(np.int32)
    data = op.L.data
    kwargs = {}
    if name == "numpy":
        kwargs = {"matrix": op.L, "color_slices": op.color_slices}

    final_update, below, it = np.inf, 0, 0
    for it in range(1, max_iter + 1):
        final_update = sweep(indptr, indices, data, op.diag, op.rhs, x,
                             op.order, op.clamp, relax, **kwargs)
        below = below + 1 if final_update < tol else 0
        if below >= 2:
            break
    converged = below >= 2

    fld = ScalarField(problem.grid, x.reshape(problem.grid.shape),
                      meta="solved")
    comp = _complementarity_report(op, x, tol)
    return Solution(field=fld, problem=problem, op=op, iterations=it,
                    final_update=float(final_update), converged=converged,
                    tol=tol, complementarity=comp)


def brute_force_lcp(problem: SignoriniProblem,
                    op: DiscreteOperator | None = None,
                    tol: float = 1e-10) -> ScalarField:
    """Exact LCP solve by enumerating active sets of thin nodes.

    Only for tiny grids: the number of constrained nodes must not exceed
    14.  For each candidate active set the equality-constrained system is
    solved densely and checked for feasibility (u >= 0 on the plane,
    residual >= 0 on the active set).
    """
    if op is None:
        op = assemble(problem)
    thin = op.thin
    if len(thin) > 14:
        raise TooManyThinNodes(f"{len(thin)} constrained nodes (max 14)")
    interior = op.interior
    pos_of = {int(i): k for k, i in enumerate(interior)}
    Aii = op.L[interior][:, interior].toarray()
    rhs = (op.rhs - op.L[:, op.boundary_idx] @ op.rhs[op.boundary_idx])[interior]
    thin_pos = np.array([pos_of[int(i)] for i in thin], dtype=np.int64)

    scale = float(np.abs(rhs).max()) or 1.0
    best = None
    for mask in range(2 ** len(thin)):
        active = thin_pos[[bool(mask >> k & 1) for k in range(len(thin))]]
        free = np.setdiff1d(np.arange(len(interior)), active)
        x = np.zeros(len(interior))
        try:
            x[free] = np.linalg.solve(Aii[np.ix_(free, free)], rhs[free])
        except np.linalg.LinAlgError:
            continue
        res = Aii @ x - rhs
        feasible = (
            x[thin_pos].min(initial=0.0) >= -tol * scale
            and (res[active].min(initial=0.0) >= -tol * scale / problem.grid.h**2))
        if feasible:
            best = x
            break
    if best is None:
        raise NoFeasibleActiveSet("no active set is complementary-feasible")

    full = op.rhs.copy()
    full[interior] = best
    return ScalarField(problem.grid, full.reshape(problem.grid.shape),
                       meta="solved")


@dataclass
class LocalReplacement:
    """Signorini replacement of a field on the ellipsoid E_r(x0).

    Stores the constrained minimizer on a local deskewed grid over the unit
    ball (coordinates yhat = y / r) plus the map back to original
    coordinates.
    """

    frame: Frame
    r: float
    local: ScalarField  # on [-1,1]^n in yhat, valid inside |yhat| <= 1
    iterations: int
    converged: bool

    def deskewed_unit(self):
        return self.local

    def __call__(self, x):
        yhat = self.frame.deskew(x) / self.r
        return self.local(yhat)

    def energy(self, rule=None) -> float:
        """int_{E_r} <A(x0) grad V, grad V> = det(a) r^{n-2} int_{B_1} |grad_yhat v|^2."""
        if rule is None:
            rule = ball_rule(self.frame.n)
        g = gradient_of(self.local, rule.nodes)
        vals = np.einsum("ki,ki->k", g, g)
        return float(self.frame.det_a * self.r ** (self.frame.n - 2)
                     * np.dot(rule.weights, vals))


def signorini_replacement(U, frame: Frame, r: float, m_local: int = 65,
                          tol: float | None = None, relax: float = 1.9,
                          max_iter: int = 50_000,
                          backend: str | None = None) -> LocalReplacement:
    """Solve the frozen-coefficient Signorini problem on E_r(x0) with U as
    boundary data.

    Deskewing reduces the frozen operator to the Laplacian, so the local
    problem lives on a uniform grid over the unit ball in yhat = y/r:
    nodes with |yhat| >= 1 within reach of an interior stencil are pinned
    to U, thin-plane nodes inside the ball are constrained.
    """
    g = Grid(frame.n, m_local)
    h = g.h
    if r * (1.0 + 4.0 * h) > valid_radius(frame) * (1.0 + 1e-12):
        raise EllipsoidExceedsDomain(
            f"replacement collar of E_{r:g}({frame.x0}) exceeds the box")
    u = DeskewedField(U, frame)

    nodes = g.nodes()
    rad = np.linalg.norm(nodes, axis=1)
    inside = rad < 1.0 - 1e-12
    # the collar holds boundary data deep enough that gradient stencils of
    # any node touched when interpolating inside the ball never reach the
    # unpinned (zero) corners: interpolation cell corners sit within
    # sqrt(n) h of the ball and their one-sided stencils go two more steps
    collar = (~inside) & (rad <= 1.0 + 3.5 * h)

    # 2n-point Laplacian rows on inside nodes (unit coefficients; the h^2
    # scale cancels against the rhs being zero)
    N = g.m**g.n
    rows, cols, vals = [], [], []
    flat_inside = np.flatnonzero(inside)
    strides = np.array([g.m**k for k in range(g.n - 1, -1, -1)], dtype=np.int64)
    for d in range(g.n):
        for s in (-1, 1):
            rows.append(flat_inside)
            cols.append(flat_inside + s * strides[d])
            vals.append(np.full(len(flat_inside), -1.0))
    rows.append(flat_inside)
    cols.append(flat_inside)
    vals.append(np.full(len(flat_inside), 2.0 * g.n))
    pinned = np.flatnonzero(~inside)
    rows.append(pinned)
    cols.append(pinned)
    vals.append(np.ones(len(pinned)))
    L = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    L.sort_indices()

    x = np.zeros(N)
    need = collar.ravel()
    x[need] = u(r * nodes[need])
    rhs = np.zeros(N)
    rhs[pinned] = x[pinned]

    thin_mask = np.zeros(g.shape, dtype=bool)
    sl = [slice(None)] * g.n
    sl[-1] = g.k_plane
    thin_mask[tuple(sl)] = True
    thin = np.flatnonzero(thin_mask.ravel() & inside.ravel())
    clamp = np.zeros(N, dtype=np.uint8)
    clamp[thin] = 1

    multi = np.stack(np.unravel_index(flat_inside, g.shape), axis=-1)
    color = (multi % 2) @ (2 ** np.arange(g.n))
    order_parts, color_slices, pos = [], [], 0
    for c in range(2**g.n):
        part = flat_inside[color == c]
        order_parts.append(part)
        color_slices.append((pos, pos + len(part)))
        pos += len(part)
    order = np.concatenate(order_parts)

    # seed the interior with the boundary data itself for a warm start
    x[flat_inside] = u(r * nodes[flat_inside])
    x[thin] = np.maximum(x[thin], 0.0)

    if tol is None:
        tol = 1e-11 * max(1.0, float(np.abs(x).max()))
    name, sweep = get_sweeper(backend)
    diag = L.diagonal()
    indptr = L.indptr.astype(np.int32)
    indices = L.indices.astype(np.int32)
    kwargs = {"matrix": L, "color_slices": color_slices} if name == "numpy" else {}

    below, it, upd = 0, 0, np.inf
    for it in range(1, max_iter + 1):
        upd = sweep(indptr, indices, L.data, diag, rhs, x, order, clamp,
                    relax, **kwargs)
        below = below + 1 if upd < tol else 0
        if below >= 2:
            break

    local = ScalarField(g, x.reshape(g.shape), meta="solved")
    return LocalReplacement(frame=frame, r=r, local=local, iterations=it,
                            converged=below >= 2)


def almost_min_audit(U, frame: Frame, r: float, m_local: int = 65,
                     rule=None, **solve_kwargs) -> dict:
    """Compare the energy of U on E_r(x0) against its Signorini replacement.

    Both energies are evaluated on the same unit-ball quadrature so the
    shared discretization error largely cancels.  Returns the two energies
    and their ratio (>= 1 up to resolution for a true minimizer).
    """
    if rule is None:
        rule = ball_rule(frame.n)
    rep = signorini_replacement(U, frame, r, m_local=m_local, **solve_kwargs)
    u = DeskewedField(U, frame)
    gU = gradient_of(u, r * rule.nodes)
    eU = float(frame.det_a * r**frame.n
               * np.dot(rule.weights, np.einsum("ki,ki->k", gU, gU)))
    gV = gradient_of(rep.local, rule.nodes) / r
    eV = float(frame.det_a * r**frame.n
               * np.dot(rule.weights, np.einsum("ki,ki->k", gV, gV)))
    if eV <= 1e-300:
        raise ZeroReplacementEnergy(f"replacement energy vanished on E_{r:g}")
    return {
        "energy_u": eU,
        "energy_replacement": eV,
        "ratio": eU / eV,
        "excess": eU / eV - 1.0,
        "replacement": rep,
    }
