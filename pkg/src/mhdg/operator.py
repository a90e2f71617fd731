"""Semi-discrete DG operator: boundary ghosts, interface fluxes, volume
terms, and the source-augmented cell-average right-hand side.

The scalar block R = (rho, m, B3, E) is tested against the Legendre product
basis, the in-plane field (B1, B2) against the divergence-free vector basis;
both take their interface values from the same 8-component HLL flux. The
Godunov-Powell source enters only the cell-average right-hand side: each
face contributes its wave-split share of the normal-B jump times S(U) at
the trace on its own side of the face.

Quadrature contractions go through paired_sum and the flux layer is written
mirror-antisymmetric, so a mirror-symmetric state produces a bitwise
mirror-symmetric residual.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from numpy.polynomial import polynomial as npoly

from . import kernels
from .basis import R_COMP, monic_legendre
from .flux import (hll_flux, jump_split_weights, physical_flux,
                   pp_wave_speeds, _flux_pair_cm, _hll_flux_cm,
                   _physical_flux_cm, _pp_wave_speeds_cm)
from .mesh import gauss_rule, paired_sum
from .state import (PositivityError, godunov_powell_source, is_admissible,
                    _gp_source_cm, _is_admissible_cm)

# dispatch switch for the compiled 2D assembly; tests flip it to pin the
# compiled path bitwise against the reference
_USE_KERNELS = kernels.AVAILABLE


@dataclass(frozen=True)
class BoundarySide:
    kind: str
    state: Optional[np.ndarray] = None
    region: Optional[Tuple[float, float]] = None
    axis: Optional[int] = None


def periodic():
    return BoundarySide("periodic")


def outflow():
    """Zero-gradient: the ghost cell copies its neighbor's coefficients."""
    return BoundarySide("outflow")


def dirichlet(state):
    """Ghost mode 0 pinned to the given conserved state, higher modes zero."""
    state = np.asarray(state, float)
    if state.shape != (8,):
        raise ValueError("dirichlet state must be a conserved 8-vector")
    return BoundarySide("dirichlet", state=state)


def reflecting(axis):
    """Mirror ghost: normal velocity and normal magnetic field flip sign.

    axis is the wall normal (0 for left/right sides, 1 for bottom/top).
    """
    if axis not in (0, 1):
        raise ValueError("reflecting axis must be 0 or 1")
    return BoundarySide("reflecting", axis=axis)


def inflow(region, state):
    """Dirichlet where the ghost-cell center's transverse coordinate falls
    inside [region[0], region[1]], outflow elsewhere on the side."""
    lo, hi = map(float, region)
    if not hi > lo:
        raise ValueError("empty inflow region")
    state = np.asarray(state, float)
    if state.shape != (8,):
        raise ValueError("inflow state must be a conserved 8-vector")
    return BoundarySide("inflow", state=state, region=(lo, hi))


@dataclass(frozen=True)
class BoundaryRecipe:
    left: BoundarySide
    right: BoundarySide
    bottom: Optional[BoundarySide] = None
    top: Optional[BoundarySide] = None

    def __post_init__(self):
        for a, b, pair in ((self.left, self.right, "left/right"),
                           (self.bottom, self.top, "bottom/top")):
            if (a is None) != (b is None):
                raise ValueError(f"{pair} sides must be set together")
            if a is None:
                continue
            if (a.kind == "periodic") != (b.kind == "periodic"):
                raise ValueError(f"unmatched periodic pair on {pair}")
        for name, normal in (("left", 0), ("right", 0), ("bottom", 1), ("top", 1)):
            side = getattr(self, name)
            if side is not None and side.kind == "reflecting" and side.axis != normal:
                raise ValueError(f"reflecting axis {side.axis} does not match "
                                 f"the {name} side")

    @classmethod
    def all_periodic(cls, dimension):
        y = (periodic(), periodic()) if dimension == 2 else (None, None)
        return cls(periodic(), periodic(), *y)

    @classmethod
    def all_outflow(cls, dimension):
        y = (outflow(), outflow()) if dimension == 2 else (None, None)
        return cls(outflow(), outflow(), *y)

    @classmethod
    def all_dirichlet(cls, state, dimension):
        y = (dirichlet(state), dirichlet(state)) if dimension == 2 else (None, None)
        return cls(dirichlet(state), dirichlet(state), *y)


class ResidualField(NamedTuple):
    """Time derivative of every modal coefficient; shapes match the
    SolutionField arrays (ghost entries stay zero). Q is None in 1D."""
    R: np.ndarray
    Q: Optional[np.ndarray]


def _check_recipe(field, recipe):
    if field.mesh.ghost != 1:
        raise ValueError("operator expects exactly one ghost layer")
    if field.mesh.dimension == 2 and recipe.bottom is None:
        raise ValueError("2D field needs bottom/top boundary sides")
    if field.mesh.dimension == 1 and recipe.bottom is not None:
        raise ValueError("1D field takes only left/right boundary sides")


def fill_ghosts(field, recipe):
    """Set the ghost-cell coefficients in place per the recipe; returns field."""
    _check_recipe(field, recipe)
    if field.mesh.dimension == 1:
        for side, at_end in ((recipe.left, False), (recipe.right, True)):
            _fill_side_1d(field, side, at_end)
        return field
    # x sides first over all rows, then y sides over all columns, so corner
    # ghosts compose both recipes (they are never read by the face loops)
    for side, axis, at_end in ((recipe.left, 0, False), (recipe.right, 0, True),
                               (recipe.bottom, 1, False), (recipe.top, 1, True)):
        _fill_side_2d(field, side, axis, at_end)
    return field


def _fill_side_1d(field, side, at_end):
    R = field.R
    nx = field.mesh.nx
    gi, ai, pi = (nx + 1, nx, 1) if at_end else (0, 1, nx)
    if side.kind == "periodic":
        R[gi] = R[pi]
    elif side.kind == "outflow":
        R[gi] = R[ai]
    elif side.kind == "dirichlet":
        R[gi] = 0.0
        R[gi, :, 0] = side.state
    elif side.kind == "reflecting":
        comp = np.ones(8)
        comp[[1, 4]] = -1.0  # normal momentum and normal magnetic field
        par = (-1.0) ** field.basis.degrees
        R[gi] = R[ai] * comp[:, None] * par[None, :]
    elif side.kind == "inflow":
        raise ValueError("inflow needs a transverse direction; "
                         "use dirichlet in 1D")
    else:
        raise ValueError(f"unknown boundary kind {side.kind!r}")


def _fill_side_2d(field, side, axis, at_end):
    mesh = field.mesh
    n = mesh.nx if axis == 0 else mesh.ny
    gi, ai, pi = (n + 1, n, 1) if at_end else (0, 1, n)

    def line(arr, idx):
        return arr[idx] if axis == 0 else arr[:, idx]

    r, q = line(field.R, gi), line(field.Q, gi)
    if side.kind == "periodic":
        r[:] = line(field.R, pi)
        q[:] = line(field.Q, pi)
        return
    if side.kind == "outflow":
        r[:] = line(field.R, ai)
        q[:] = line(field.Q, ai)
        return
    if side.kind == "dirichlet":
        _dirichlet_line(r, q, side.state)
        return
    if side.kind == "reflecting":
        comp = np.ones(6)
        comp[1 + axis] = -1.0  # normal momentum; normal B flips via Q signs
        par = (-1.0) ** np.array([a[axis] for a in field.basis.alphas])
        r[:] = line(field.R, ai) * (comp[:, None] * par[None, :])
        q[:] = line(field.Q, ai) * field.vbasis.mirror_signs(axis)
        return
    if side.kind == "inflow":
        r[:] = line(field.R, ai)
        q[:] = line(field.Q, ai)
        centers = (mesh.y_centers(True) if axis == 0 else mesh.x_centers(True))
        inside = (centers >= side.region[0]) & (centers <= side.region[1])
        r[inside] = 0.0
        r[inside, :, 0] = side.state[R_COMP]
        q[inside] = 0.0
        q[inside, 0] = side.state[5]
        q[inside, 1] = side.state[4]
        return
    raise ValueError(f"unknown boundary kind {side.kind!r}")


def _dirichlet_line(r, q, state):
    r[:] = 0.0
    r[..., 0] = state[R_COMP]
    q[:] = 0.0
    q[..., 0] = state[5]  # constant members: (0,1) carries B2, (1,0) carries B1
    q[..., 1] = state[4]


def _check_traces(Um, Up, label):
    for name, U in (("inner", Um), ("outer", Up)):
        ok = is_admissible(U)
        if not ok.all():
            idx = tuple(int(t) for t in np.argwhere(~ok)[0])
            raise PositivityError(
                f"inadmissible {name} trace state at {label}-face "
                f"{idx[:-1]}, quadrature node {idx[-1]}",
                where=(label,) + idx)


def _face_fluxes(Um, Up, axis, label, gamma, roe_surrogate):
    """HLL flux plus the per-side Godunov-Powell source contributions
    B-+ * S(trace) at every face quadrature node."""
    _check_traces(Um, Up, label)
    Fm = physical_flux(Um, axis, gamma)
    Fp = physical_flux(Up, axis, gamma)
    speeds = pp_wave_speeds(Um, Up, axis, gamma, roe_surrogate,
                            fluxes=(Fm, Fp), check=False)
    F = hll_flux(Um, Up, speeds, axis, gamma, fluxes=(Fm, Fp))
    w_minus, w_plus = jump_split_weights(speeds)
    jump = Up[..., 4 + axis] - Um[..., 4 + axis]
    Sm = (w_minus * jump)[..., None] * godunov_powell_source(Um)
    Sp = (w_plus * jump)[..., None] * godunov_powell_source(Up)
    return F, Sm, Sp


def assemble(field, recipe, gamma, roe_surrogate=True):
    """Fill ghosts, then return (ResidualField, L): the time derivative of
    every modal coefficient and the source-augmented cell-average
    right-hand side (interior cells, conserved 8-vectors)."""
    fill_ghosts(field, recipe)
    if field.mesh.dimension == 1:
        return _assemble_1d(field, gamma, roe_surrogate)
    return _assemble_2d(field, gamma, roe_surrogate)


def semidiscrete_residual(field, recipe, gamma, roe_surrogate=True):
    """Time derivative of all modal coefficients (no source terms)."""
    return assemble(field, recipe, gamma, roe_surrogate)[0]


def cell_average_rhs(field, recipe, gamma, roe_surrogate=True):
    """Cell-average right-hand side L including the upwind source."""
    return assemble(field, recipe, gamma, roe_surrogate)[1]


def _assemble_1d(field, gamma, roe_surrogate):
    mesh = field.mesh
    lb = field.basis
    nx, dx = mesh.nx, mesh.dx
    R = field.R
    rule = gauss_rule(field.k + 1)
    xi = 2.0 * rule.nodes
    w = rule.weights

    eR = lb.eval_members(np.array(1.0))
    eL = lb.eval_members(np.array(-1.0))
    Um = np.tensordot(R[:nx + 1], eR, (2, 0))
    Up = np.tensordot(R[1:nx + 2], eL, (2, 0))
    F, Sm, Sp = _face_fluxes(Um, Up, 0, "x", gamma, roe_surrogate)
    L = -((F[1:] - F[:-1]) + (Sm[1:] + Sp[:-1])) / dx

    sval = lb.eval_members(xi)
    dval = lb.eval_derivs(xi)
    Uvol = np.moveaxis(np.tensordot(R[1:nx + 1], sval, (2, 0)), 1, 2)
    Fvol = physical_flux(Uvol, 0, gamma)
    res = np.zeros_like(R)
    for a in range(lb.dim):
        vol = paired_sum(Fvol * (w * dval[a])[None, :, None], 1)
        face = (eR[a] * F[1:] - eL[a] * F[:-1]) / dx
        res[1:nx + 1, :, a] = (vol - face) / lb.norms[a]
    res[:, 4, 1:] = 0.0  # B1 is locally constant in 1D
    return ResidualField(res, None), L


def _assemble_2d(field, gamma, roe_surrogate):
    # Every state array in here is component-first (8, ...): on one core the
    # assembly is memory-bound and interleaved per-component slices waste
    # most of the bandwidth. Results match the interleaved flux layer
    # bitwise (same expression trees), and the outputs are materialized back
    # in the public (..., 8) layout at the end.
    mesh = field.mesh
    basis, vbasis = field.basis, field.vbasis
    nx, ny, dx, dy = mesh.nx, mesh.ny, mesh.dx, mesh.dy
    R, Q = field.R, field.Q
    rule = gauss_rule(field.k + 1)
    xi = 2.0 * rule.nodes
    w = rule.weights

    # tabulate the modal solution at every evaluation point (the four cell
    # edges at q nodes each, then the (k+1)^2 volume nodes) in one
    # contraction over the padded grid, then slice the traces out of it
    q = xi.size
    stab = np.concatenate(
        [basis.eval_members(-1.0, xi), basis.eval_members(1.0, xi),
         basis.eval_members(xi, -1.0), basis.eval_members(xi, 1.0),
         basis.eval_members(xi[:, None], xi[None, :]).reshape(basis.dim, -1)],
        axis=1)
    vtab = np.concatenate(
        [vbasis.eval_members(-1.0, xi), vbasis.eval_members(1.0, xi),
         vbasis.eval_members(xi, -1.0), vbasis.eval_members(xi, 1.0),
         vbasis.eval_members(xi[:, None], xi[None, :]).reshape(
             vbasis.dim, 2, -1)],
        axis=2)
    TR = np.tensordot(R, stab, (3, 0))   # (nx+2, ny+2, 6, npts)
    TQ = np.tensordot(Q, vtab, (2, 0))   # (nx+2, ny+2, 2, npts)

    if _USE_KERNELS:
        return _assemble_2d_compiled(field, TR, TQ, q, gamma, roe_surrogate)

    vgrad = vbasis.eval_gradients(xi[:, None], xi[None, :])
    xsl = slice(1, nx + 1)
    ysl = slice(1, ny + 1)
    Um_x = _u8cm(TR[:nx + 1, ysl, :, q:2 * q], TQ[:nx + 1, ysl, :, q:2 * q])
    Up_x = _u8cm(TR[1:, ysl, :, :q], TQ[1:, ysl, :, :q])
    Fx, Smx, Spx = _face_fluxes_cm(Um_x, Up_x, 0, "x", gamma, roe_surrogate)

    Um_y = _u8cm(TR[xsl, :ny + 1, :, 3 * q:4 * q], TQ[xsl, :ny + 1, :, 3 * q:4 * q])
    Up_y = _u8cm(TR[xsl, 1:, :, 2 * q:3 * q], TQ[xsl, 1:, :, 2 * q:3 * q])
    Fy, Smy, Spy = _face_fluxes_cm(Um_y, Up_y, 1, "y", gamma, roe_surrogate)

    Xx = (Fx[:, 1:] - Fx[:, :-1]) + (Smx[:, 1:] + Spx[:, :-1])
    Xy = (Fy[:, :, 1:] - Fy[:, :, :-1]) + (Smy[:, :, 1:] + Spy[:, :, :-1])
    Lcm = -(paired_sum(Xx * w, 3) / dx + paired_sum(Xy * w, 3) / dy)
    L = np.ascontiguousarray(np.moveaxis(Lcm, 0, 2))

    # volume fluxes at the tensor Gauss nodes
    Uvol = _u8cm(TR[xsl, ysl, :, 4 * q:].reshape(nx, ny, 6, q, q),
                 TQ[xsl, ysl, :, 4 * q:].reshape(nx, ny, 2, q, q))
    F1, F2 = _flux_pair_cm(Uvol, gamma)

    w2 = w[:, None] * w[None, :]

    # scalar-block residual: the product basis separates, so the face means
    # need only the k+1 distinct edge profiles (scaled by the member's exact
    # endpoint value), and the volume integral contracts one direction at a
    # time; each contraction over nodes stays pairwise
    p1 = monic_legendre(basis.k)
    pv = np.stack([npoly.polyval(xi, c) for c in p1])
    pd = np.stack([npoly.polyval(xi, npoly.polyder(c)) for c in p1])
    pend = np.stack([[npoly.polyval(-1.0, c), npoly.polyval(1.0, c)]
                     for c in p1])
    rows = pv * w

    resR = np.zeros_like(R)
    FxR, FyR = Fx[R_COMP], Fy[R_COMP]
    MxH = _rows_mean(FxR[:, 1:], rows)
    MxL = _rows_mean(FxR[:, :-1], rows)
    MyH = _rows_mean(FyR[:, :, 1:], rows)
    MyL = _rows_mean(FyR[:, :, :-1], rows)

    FR1 = F1[R_COMP]
    FR2 = F2[R_COMP]
    cdx = 2.0 / dx
    cdy = 2.0 / dy
    inner1 = {}
    inner2 = {}
    for a1, a2 in basis.alphas:
        if a1 >= 1 and a1 not in inner1:
            inner1[a1] = paired_sum(FR1 * (cdx * w * pd[a1])[:, None], 3)
        if a2 >= 1 and a1 not in inner2:
            inner2[a1] = paired_sum(FR2 * (w * pv[a1])[:, None], 3)

    out = np.empty(FR1.shape[:3] + (basis.dim,))
    for a, (a1, a2) in enumerate(basis.alphas):
        t = (pend[a1, 1] * MxH[..., a2]
             - pend[a1, 0] * MxL[..., a2]) * (-1.0 / dx)
        t += (pend[a2, 1] * MyH[..., a1]
              - pend[a2, 0] * MyL[..., a1]) * (-1.0 / dy)
        if a1 >= 1:
            acc = inner1[a1] * (w * pv[a2])
            if a2 >= 1:
                acc += inner2[a1] * (cdy * w * pd[a2])
            t += paired_sum(acc, 3)
        elif a2 >= 1:
            t += paired_sum(inner2[a1] * (cdy * w * pd[a2]), 3)
        t /= basis.norms[a]
        out[..., a] = t
    resR[xsl, ysl] = np.moveaxis(out, 0, 2)

    resQ = np.zeros_like(Q)
    F1Qw = F1[4:6] * w2
    F2Qw = F2[4:6] * w2
    FxQ, FyQ = Fx[4:6], Fy[4:6]
    vxR = vbasis.eval_members(1.0, xi) * w
    vxL = vbasis.eval_members(-1.0, xi) * w
    vyT = vbasis.eval_members(xi, 1.0) * w
    vyB = vbasis.eval_members(xi, -1.0) * w
    fxq = _qface_cm(FxQ[:, 1:], vxR) - _qface_cm(FxQ[:, :-1], vxL)
    fyq = _qface_cm(FyQ[:, :, 1:], vyT) - _qface_cm(FyQ[:, :, :-1], vyB)
    outQ = fxq * (-1.0 / dx)
    outQ += fyq * (-1.0 / dy)
    bq = np.empty_like(F1Qw[0])
    t1 = np.empty_like(bq)
    t2 = np.empty_like(bq)
    for a in range(vbasis.dim):
        np.multiply(F1Qw[0], vgrad[a, 0, 0], out=bq)
        np.multiply(F1Qw[1], vgrad[a, 1, 0], out=t1)
        bq += t1
        np.multiply(F2Qw[0], vgrad[a, 0, 1], out=t1)
        np.multiply(F2Qw[1], vgrad[a, 1, 1], out=t2)
        t1 += t2
        bq += t1
        outQ[..., a] += paired_sum(paired_sum(bq, 2), 2)
        outQ[..., a] /= vbasis.norms[a]
    resQ[xsl, ysl] = outQ

    return ResidualField(resR, resQ), L


# quadrature/basis tables for the compiled per-cell kernel, keyed by the
# basis signature; identical to the arrays the reference path builds inline
_CELL_TABLES = {}


def _cell_tables(basis, vbasis):
    key = (basis.k, basis.dx, basis.dy)
    hit = _CELL_TABLES.get(key)
    if hit is not None:
        return hit
    rule = gauss_rule(basis.k + 1)
    xi = 2.0 * rule.nodes
    w = rule.weights
    p1 = monic_legendre(basis.k)
    pv = np.stack([npoly.polyval(xi, c) for c in p1])
    pd = np.stack([npoly.polyval(xi, npoly.polyder(c)) for c in p1])
    pend = np.stack([[npoly.polyval(-1.0, c), npoly.polyval(1.0, c)]
                     for c in p1])
    cdx = 2.0 / basis.dx
    cdy = 2.0 / basis.dy
    tables = (
        w,
        w[:, None] * w[None, :],
        pv * w,
        pend,
        cdx * w * pd,
        w * pv,
        cdy * w * pd,
        np.array([a1 for a1, _ in basis.alphas], dtype=np.int64),
        np.array([a2 for _, a2 in basis.alphas], dtype=np.int64),
        R_COMP.astype(np.int64),
        basis.norms,
        vbasis.eval_gradients(xi[:, None], xi[None, :]),
        vbasis.eval_members(1.0, xi) * w,
        vbasis.eval_members(-1.0, xi) * w,
        vbasis.eval_members(xi, 1.0) * w,
        vbasis.eval_members(xi, -1.0) * w,
        vbasis.norms,
    )
    _CELL_TABLES[key] = tables
    return tables


def _assemble_2d_compiled(field, TR, TQ, q, gamma, roe_surrogate):
    """Kernel-backed interior of _assemble_2d; bitwise-equal to the
    reference path below it."""
    mesh = field.mesh
    nx, ny, dx, dy = mesh.nx, mesh.ny, mesh.dx, mesh.dy
    (w, w2, rows, pend, D1, E1, O2, a1s, a2s, rsel, norms,
     vgrad, vxR, vxL, vyT, vyB, normsQ) = _cell_tables(field.basis,
                                                       field.vbasis)
    Fx, Smx, Spx = _face_terms_compiled(TR, TQ, q, 0, "x", gamma,
                                        roe_surrogate, nx + 1, ny)
    Fy, Smy, Spy = _face_terms_compiled(TR, TQ, q, 1, "y", gamma,
                                        roe_surrogate, nx, ny + 1)
    L = np.empty((nx, ny, 8))
    resR = np.zeros_like(field.R)
    resQ = np.zeros_like(field.Q)
    if q == 3:
        status = kernels.cell_terms_k2(
            TR, TQ, Fx, Fy, Smx, Spx, Smy, Spy,
            w, w2, rows, pend, D1, E1, O2, a1s, a2s, rsel, norms,
            vgrad, vxR, vxL, vyT, vyB, normsQ,
            gamma, dx, dy, -1.0 / dx, -1.0 / dy, L, resR, resQ)
    else:
        status = kernels.cell_terms(
            TR, TQ, q, 4 * q, Fx, Fy, Smx, Spx, Smy, Spy,
            w, w2, rows, pend, D1, E1, O2, a1s, a2s, rsel, norms,
            vgrad, vxR, vxL, vyT, vyB, normsQ,
            gamma, dx, dy, -1.0 / dx, -1.0 / dy, L, resR, resQ)
    if status != 0:
        xsl = slice(1, nx + 1)
        ysl = slice(1, ny + 1)
        Uvol = _u8cm(TR[xsl, ysl, :, 4 * q:].reshape(nx, ny, 6, q, q),
                     TQ[xsl, ysl, :, 4 * q:].reshape(nx, ny, 2, q, q))
        _flux_pair_cm(Uvol, gamma)
        raise RuntimeError("compiled volume fault vanished on recomputation")
    return ResidualField(resR, resQ), L


def _face_terms_compiled(TR, TQ, q, axis, label, gamma, roe_surrogate,
                         n1, n2):
    Fh = np.empty((8, n1, n2, q))
    Sm = np.empty((8, n1, n2, q))
    Sp = np.empty((8, n1, n2, q))
    status = kernels.face_pipeline(TR, TQ, q, axis, gamma, roe_surrogate,
                                   Fh, Sm, Sp)
    if status != 0:
        # rebuild the traces and re-run the reference for the exact fault
        if axis == 0:
            nx, ny = n1 - 1, n2
            ysl = slice(1, ny + 1)
            Um = _u8cm(TR[:nx + 1, ysl, :, q:2 * q],
                       TQ[:nx + 1, ysl, :, q:2 * q])
            Up = _u8cm(TR[1:, ysl, :, :q], TQ[1:, ysl, :, :q])
        else:
            nx, ny = n1, n2 - 1
            xsl = slice(1, nx + 1)
            Um = _u8cm(TR[xsl, :ny + 1, :, 3 * q:4 * q],
                       TQ[xsl, :ny + 1, :, 3 * q:4 * q])
            Up = _u8cm(TR[xsl, 1:, :, 2 * q:3 * q],
                       TQ[xsl, 1:, :, 2 * q:3 * q])
        _face_fluxes_cm(Um, Up, axis, label, gamma, roe_surrogate)
        raise RuntimeError("compiled face fault vanished on recomputation")
    return Fh, Sm, Sp


def _u8cm(tr, tq):
    """Component-first conserved 8-vectors from tabulated scalar-block
    values (n1, n2, 6, pts) and in-plane magnetic values (n1, n2, 2, pts)."""
    U = np.empty((8,) + tr.shape[:2] + tr.shape[3:])
    U[0] = tr[:, :, 0]
    U[1] = tr[:, :, 1]
    U[2] = tr[:, :, 2]
    U[3] = tr[:, :, 3]
    U[4] = tq[:, :, 0]
    U[5] = tq[:, :, 1]
    U[6] = tr[:, :, 4]
    U[7] = tr[:, :, 5]
    return U


def _check_traces_cm(Um, Up, label):
    for name, U in (("inner", Um), ("outer", Up)):
        ok = _is_admissible_cm(U)
        if not ok.all():
            idx = tuple(int(t) for t in np.argwhere(~ok)[0])
            raise PositivityError(
                f"inadmissible {name} trace state at {label}-face "
                f"{idx[:-1]}, quadrature node {idx[-1]}",
                where=(label,) + idx)


def _face_fluxes_cm(Um, Up, axis, label, gamma, roe_surrogate):
    """_face_fluxes for component-first arrays (8, ...)."""
    _check_traces_cm(Um, Up, label)
    Fm = _physical_flux_cm(Um, axis, gamma)
    Fp = _physical_flux_cm(Up, axis, gamma)
    speeds = _pp_wave_speeds_cm(Um, Up, axis, gamma, roe_surrogate,
                                fluxes=(Fm, Fp), check=False)
    F = _hll_flux_cm(Um, Up, speeds, (Fm, Fp))
    w_minus, w_plus = jump_split_weights(speeds)
    jump = Up[4 + axis] - Um[4 + axis]
    Sm = (w_minus * jump) * _gp_source_cm(Um)
    Sp = (w_plus * jump) * _gp_source_cm(Up)
    return F, Sm, Sp


def _rows_mean(F, rows):
    """Face means of the flux against each 1D edge profile: F (c, ..., q),
    rows (k+1, q) already weight-scaled; returns (c, ..., k+1)."""
    return paired_sum(F[..., None] * rows.T, -2)


def _qface_cm(FQ, wtab):
    """Face means of (vector test function . flux rows B1,B2) for the whole
    vector test set: FQ (2, ..., q), wtab (DQ, 2, q) already weight-scaled;
    returns (..., DQ)."""
    inner = (FQ[0][..., None] * wtab[:, 0].T
             + FQ[1][..., None] * wtab[:, 1].T)
    return paired_sum(inner, -2)


def _face_states(R, Q, stab, vtab):
    """Conserved 8-vectors of the modal solution at tabulated points:
    stab (DR, ...) and vtab (DQ, 2, ...) share trailing point axes."""
    TR = np.tensordot(R, stab, (3, 0))      # (..., 6) + points
    TQ = np.tensordot(Q, vtab, (2, 0))      # (..., 2) + points
    U = np.empty(R.shape[:2] + stab.shape[1:] + (8,))
    TRm = np.moveaxis(TR, 2, -1)
    U[..., :4] = TRm[..., :4]
    U[..., 6:] = TRm[..., 4:]
    U[..., 4] = TQ[:, :, 0]
    U[..., 5] = TQ[:, :, 1]
    return U


