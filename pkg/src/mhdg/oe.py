"""Exponential modal damping applied between Runge-Kutta stages.

Interface jumps of the solution and its derivatives set per-cell damping
rates; modal coefficients are then multiplied by exact exponential decay
factors, one rate sum per polynomial degree. Cell averages never change,
and the in-plane magnetic block is scaled degree-group-wise so the
coefficients stay inside the divergence-free span.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import kernels
from .basis import R_COMP
from .flux import max_signal_speed
from .mesh import gauss_rule, paired_sum

# relative floor below which a component counts as constant and is not damped
_FLAT = 1e-13

# dispatch switch for the compiled damping assembly; tests flip it to pin
# the compiled path bitwise against the reference
_USE_KERNELS = kernels.AVAILABLE


@dataclass(frozen=True)
class DampingProfile:
    """Per-cell damping rates for orders m = 0..k.

    rates_R: (nx, k+1, 8) in 1D, (nx, ny, k+1, 6) in 2D; rates_Q (nx, ny, k+1)
    or None in 1D. beta_x/beta_y are the cell-average signal speeds used as
    wave-speed scales.
    """

    rates_R: np.ndarray
    rates_Q: np.ndarray
    beta_x: np.ndarray
    beta_y: np.ndarray


def _alpha_list(m):
    return [(m - r, r) for r in range(m + 1)]


def _deriv2d(c, a1, a2):
    d = c
    if a1:
        d = npoly.polyder(d, m=a1, axis=0)
    if a2:
        d = npoly.polyder(d, m=a2, axis=1)
    return np.atleast_2d(d)


# face tabulations of the derivative polynomials depend only on
# (k, dx, dy, axis, m); cache them across calls and fields
_JUMP_TABLES = {}


def _jump_tables(basis, vbasis, k, dx, dy, axis, m):
    """Chain-scaled face tabulations of every |alpha| = m derivative of the
    scalar and vector members, stacked as (dim, m+1, q) per trace side."""
    key = (k, dx, dy, axis, m)
    hit = _JUMP_TABLES.get(key)
    if hit is not None:
        return hit
    rule = gauss_rule(k + 1)
    t = 2.0 * rule.nodes
    one = np.ones_like(t)
    pin, pout = ((one, t), (-one, t)) if axis == 0 else ((t, one), (t, -one))
    q = t.size
    TI = np.empty((basis.dim, m + 1, q))
    TO = np.empty((basis.dim, m + 1, q))
    V1I = np.empty((vbasis.dim, m + 1, q))
    V1O = np.empty((vbasis.dim, m + 1, q))
    V2I = np.empty((vbasis.dim, m + 1, q))
    V2O = np.empty((vbasis.dim, m + 1, q))
    for r, (a1, a2) in enumerate(_alpha_list(m)):
        mult = math.factorial(m) // (math.factorial(a1) * math.factorial(a2))
        chain = mult * (2.0 / dx) ** a1 * (2.0 / dy) ** a2
        for n, c in enumerate(basis.coefs):
            dc = _deriv2d(c, a1, a2)
            TI[n, r] = npoly.polyval2d(*pin, dc) * chain
            TO[n, r] = npoly.polyval2d(*pout, dc) * chain
        for n, (c1, c2) in enumerate(vbasis.members):
            d1, d2 = _deriv2d(c1, a1, a2), _deriv2d(c2, a1, a2)
            V1I[n, r] = npoly.polyval2d(*pin, d1) * chain
            V1O[n, r] = npoly.polyval2d(*pout, d1) * chain
            V2I[n, r] = npoly.polyval2d(*pin, d2) * chain
            V2O[n, r] = npoly.polyval2d(*pout, d2) * chain
    # weights fold into the tables (all positive); the two traces keep
    # separate contractions so identical traces cancel exactly
    w = rule.weights
    tabs = (TI * w, TO * w, V1I * w, V1O * w, V2I * w, V2O * w)
    _JUMP_TABLES[key] = tabs
    return tabs


def _all_jump_tables(basis, vbasis, k, dx, dy, axis):
    """The m = 0..k tables concatenated on the column axis, so one
    contraction covers every derivative order."""
    key = (k, dx, dy, axis, "all")
    hit = _JUMP_TABLES.get(key)
    if hit is not None:
        return hit
    per_m = [_jump_tables(basis, vbasis, k, dx, dy, axis, m)
             for m in range(k + 1)]
    tabs = tuple(np.concatenate([p[i] for p in per_m], axis=1)
                 for i in range(6))
    _JUMP_TABLES[key] = tabs
    return tabs


def edge_jump_integrals(field, axis, m):
    """Face-averaged absolute jumps of the order-m derivatives.

    For every face along `axis`, and every multi-index |alpha| = m, the mean
    over the face of |jump of (|alpha|!/(alpha1! alpha2!)) d^alpha u|, in
    conserved-component slots. 2D shape (faces..., m+1, 8); 1D shape
    (nx+1, 8). Ghost coefficients must be current.
    """
    mesh = field.mesh
    if mesh.dimension == 1:
        lb = field.basis
        chain = (2.0 / mesh.dx) ** m
        tab_in = np.array([npoly.polyval(1.0, npoly.polyder(c, m=m) if m else c)
                           for c in lb.coefs])
        tab_out = np.array([npoly.polyval(-1.0, npoly.polyder(c, m=m) if m else c)
                            for c in lb.coefs])
        nx = mesh.nx
        Uin = np.tensordot(field.R[:nx + 1], tab_in, (2, 0))
        Uout = np.tensordot(field.R[1:nx + 2], tab_out, (2, 0))
        return np.abs((Uout - Uin) * chain)

    tabs = _jump_tables(field.basis, field.vbasis, field.k,
                        mesh.dx, mesh.dy, axis, m)
    return _jump_integrals_2d(field, axis, tabs)


def _edge_jumps_all(field, axis):
    """edge_jump_integrals for every order m = 0..k in one contraction;
    order m occupies columns m(m+1)/2 .. m(m+1)/2 + m."""
    mesh = field.mesh
    tabs = _all_jump_tables(field.basis, field.vbasis, field.k,
                            mesh.dx, mesh.dy, axis)
    return _jump_integrals_2d(field, axis, tabs)


def _jump_traces(field, axis):
    """Per-side trace contractions against the all-orders derivative tables,
    for the compiled damping assembly. Same tensordot calls as the reference
    jump integrals; the subtraction happens inside the kernel."""
    mesh = field.mesh
    nx, ny = mesh.nx, mesh.ny
    TI, TO, V1I, V1O, V2I, V2O = _all_jump_tables(
        field.basis, field.vbasis, field.k, mesh.dx, mesh.dy, axis)
    if axis == 0:
        Rlo, Rhi = field.R[:nx + 1, 1:ny + 1], field.R[1:, 1:ny + 1]
        Qlo, Qhi = field.Q[:nx + 1, 1:ny + 1], field.Q[1:, 1:ny + 1]
    else:
        Rlo, Rhi = field.R[1:nx + 1, :ny + 1], field.R[1:nx + 1, 1:]
        Qlo, Qhi = field.Q[1:nx + 1, :ny + 1], field.Q[1:nx + 1, 1:]
    return (np.tensordot(Rhi, TO, (3, 0)), np.tensordot(Rlo, TI, (3, 0)),
            np.tensordot(Qhi, V1O, (2, 0)), np.tensordot(Qlo, V1I, (2, 0)),
            np.tensordot(Qhi, V2O, (2, 0)), np.tensordot(Qlo, V2I, (2, 0)))


def _jump_integrals_2d(field, axis, tabs):
    mesh = field.mesh
    nx, ny = mesh.nx, mesh.ny
    TI, TO, V1I, V1O, V2I, V2O = tabs
    shape = (nx + 1, ny) if axis == 0 else (nx, ny + 1)
    out = np.zeros(shape + (TI.shape[1], 8))

    if axis == 0:
        Rlo, Rhi = field.R[:nx + 1, 1:ny + 1], field.R[1:, 1:ny + 1]
        Qlo, Qhi = field.Q[:nx + 1, 1:ny + 1], field.Q[1:, 1:ny + 1]
    else:
        Rlo, Rhi = field.R[1:nx + 1, :ny + 1], field.R[1:nx + 1, 1:]
        Qlo, Qhi = field.Q[1:nx + 1, :ny + 1], field.Q[1:nx + 1, 1:]

    # weights ride inside the tables, so after |.| only the node sum is left
    jumpR = np.tensordot(Rhi, TO, (3, 0))    # (faces..., 6, cols, q)
    jumpR -= np.tensordot(Rlo, TI, (3, 0))
    jumpQ1 = np.tensordot(Qhi, V1O, (2, 0))  # (faces..., cols, q)
    jumpQ1 -= np.tensordot(Qlo, V1I, (2, 0))
    jumpQ2 = np.tensordot(Qhi, V2O, (2, 0))
    jumpQ2 -= np.tensordot(Qlo, V2I, (2, 0))
    np.abs(jumpR, out=jumpR)
    np.abs(jumpQ1, out=jumpQ1)
    np.abs(jumpQ2, out=jumpQ2)
    mR = np.moveaxis(paired_sum(jumpR, 4), 2, -1)
    out[..., :4] = mR[..., :4]
    out[..., 6:] = mR[..., 4:]
    out[..., 4] = paired_sum(jumpQ1, 3)
    out[..., 5] = paired_sum(jumpQ2, 3)
    return out


def _sample_points(k):
    rule = gauss_rule(k + 2)
    t = 2.0 * rule.nodes
    px = np.concatenate([np.repeat(t, t.size), [-1.0, -1.0, 1.0, 1.0]])
    py = np.concatenate([np.tile(t, t.size), [-1.0, 1.0, -1.0, 1.0]])
    return px, py


def _sampled_norms(field):
    """Global sup of |component - its domain average| and of |component|,
    sampled on a tensor Gauss grid plus cell corners, interior cells only.

    The domain average is the mean of the cell averages (uniform mesh), so
    adding a constant to a component leaves its damping untouched.
    """
    # sup over samples of |x - a| is max(xmax - a, a - xmin) and sup |x| is
    # max(|xmax|, |xmin|); rounding is monotone, so this matches the
    # elementwise form bitwise while skipping the deviation arrays entirely
    if field.mesh.dimension == 1:
        t = 2.0 * gauss_rule(field.k + 2).nodes
        pts = np.concatenate([t, [-1.0, 1.0]])
        stab = field.basis.eval_members(pts)
        R = field.R[1:field.mesh.nx + 1]
        full = np.tensordot(R, stab, (2, 0))
        avg = paired_sum(R[:, :, 0], 0) / field.mesh.nx
        mx = full.max(axis=(0, 2))
        mn = full.min(axis=(0, 2))
        return (np.maximum(mx - avg, avg - mn),
                np.maximum(np.abs(mx), np.abs(mn)))

    px, py = _sample_points(field.k)
    stab = field.basis.eval_members(px, py)
    vtab = field.vbasis.eval_members(px, py)
    sl = field.interior
    R, Q = field.R[sl], field.Q[sl]
    ncell = field.mesh.nx * field.mesh.ny
    fullR = np.tensordot(R, stab, (3, 0))
    avgR = paired_sum(paired_sum(R[..., 0], 0), 0) / ncell
    fullQ = np.tensordot(Q[..., 2:], vtab[2:], (2, 0))
    avgQ = paired_sum(paired_sum(Q[..., :2], 0), 0)[::-1] / ncell
    if _USE_KERNELS:
        mxR = np.empty(6)
        mnR = np.empty(6)
        mxQ = np.empty(2)
        mnQ = np.empty(2)
        kernels.minmax_lastpair(fullR, mxR, mnR)
        kernels.minmax_q_planes(fullQ, np.ascontiguousarray(Q[..., :2]),
                                mxQ, mnQ)
    else:
        fullQ[..., 0, :] += Q[..., 1][..., None]  # B1 constant part
        fullQ[..., 1, :] += Q[..., 0][..., None]
        mxR = fullR.max(axis=(0, 1, 3))
        mnR = fullR.min(axis=(0, 1, 3))
        mxQ = fullQ.max(axis=(0, 1, 3))
        mnQ = fullQ.min(axis=(0, 1, 3))
    norm_dev = np.empty(8)
    norm_full = np.empty(8)
    norm_dev[R_COMP] = np.maximum(mxR - avgR, avgR - mnR)
    norm_full[R_COMP] = np.maximum(np.abs(mxR), np.abs(mnR))
    norm_dev[4:6] = np.maximum(mxQ - avgQ, avgQ - mnQ)
    norm_full[4:6] = np.maximum(np.abs(mxQ), np.abs(mnQ))
    return norm_dev, norm_full


def damping_rates(field, gamma):
    """Assemble the damping profile from face jumps of the current field.

    Ghost coefficients must be current; cell averages must be admissible
    (the wave-speed scales are evaluated there).
    """
    mesh = field.mesh
    k = field.k
    avg = field.cell_averages()
    norm_dev, norm_full = _sampled_norms(field)
    live = norm_dev >= _FLAT * (1.0 + norm_full)
    den = np.where(live, norm_dev, 1.0)

    if mesh.dimension == 1:
        beta = max_signal_speed(avg, 0, gamma)
        rates = np.zeros((mesh.nx, k + 1, 8))
        for m in range(k + 1):
            pref = ((2 * m + 1) * mesh.dx ** m
                    / (2.0 * (2 * k - 1) * math.factorial(m)))
            sig = np.where(live, pref * edge_jump_integrals(field, 0, m) / den, 0.0)
            rates[:, m, :] = beta[:, None] * (sig[1:] + sig[:-1]) / mesh.dx
        return DampingProfile(rates, None, beta, None)

    betax = max_signal_speed(avg, 0, gamma)
    betay = max_signal_speed(avg, 1, gamma)
    ratesR = np.zeros((mesh.nx, mesh.ny, k + 1, 6))
    ratesQ = np.zeros((mesh.nx, mesh.ny, k + 1))
    if _USE_KERNELS:
        prefx = np.array([(2 * m + 1) * mesh.dx ** m
                          / (2.0 * (2 * k - 1) * math.factorial(m))
                          for m in range(k + 1)])
        prefy = np.array([(2 * m + 1) * mesh.dy ** m
                          / (2.0 * (2 * k - 1) * math.factorial(m))
                          for m in range(k + 1)])
        if k == 2:
            kernels.oe_rates_2d_k2(*_jump_traces(field, 0),
                                   *_jump_traces(field, 1),
                                   live, den, prefx, prefy, betax, betay,
                                   mesh.dx, mesh.dy, ratesR, ratesQ)
        else:
            kernels.oe_rates_2d(*_jump_traces(field, 0),
                                *_jump_traces(field, 1),
                                live, den, prefx, prefy, betax, betay,
                                mesh.dx, mesh.dy, k + 1, ratesR, ratesQ)
        return DampingProfile(ratesR, ratesQ, betax, betay)
    jx = _edge_jumps_all(field, 0)
    jy = _edge_jumps_all(field, 1)
    for m in range(k + 1):
        off = m * (m + 1) // 2
        prefx = ((2 * m + 1) * mesh.dx ** m
                 / (2.0 * (2 * k - 1) * math.factorial(m)))
        prefy = ((2 * m + 1) * mesh.dy ** m
                 / (2.0 * (2 * k - 1) * math.factorial(m)))
        mx = jx[..., off:off + m + 1, :].sum(axis=2)
        my = jy[..., off:off + m + 1, :].sum(axis=2)
        sigx = np.where(live, prefx * mx / den, 0.0)
        sigy = np.where(live, prefy * my / den, 0.0)
        ratesR[:, :, m, :] = (
            betax[..., None] * (sigx[1:] + sigx[:-1])[..., R_COMP] / mesh.dx
            + betay[..., None] * (sigy[:, 1:] + sigy[:, :-1])[..., R_COMP] / mesh.dy)
        sigxQ = np.maximum(sigx[..., 4], sigx[..., 5])
        sigyQ = np.maximum(sigy[..., 4], sigy[..., 5])
        ratesQ[:, :, m] = (betax * (sigxQ[1:] + sigxQ[:-1]) / mesh.dx
                           + betay * (sigyQ[:, 1:] + sigyQ[:, :-1]) / mesh.dy)
    return DampingProfile(ratesR, ratesQ, betax, betay)


def oe_apply(field, profile, dt):
    """Damp modal coefficients in place: degree-mu coefficients are scaled
    by exp(-dt * sum_{m<=mu} rate_m). Cell averages (and the constant part
    of the in-plane magnetic block) are untouched."""
    k = field.k
    if field.mesh.dimension == 1:
        cum = np.cumsum(profile.rates_R, axis=1)
        fac = np.exp(-dt * cum)
        field.R[1:field.mesh.nx + 1, :, 1:] *= np.swapaxes(fac, 1, 2)[:, :, 1:]
        return field

    sl = field.interior
    degR = field.basis.degrees
    cumR = np.cumsum(profile.rates_R, axis=2)
    facR = np.exp(-dt * cumR[:, :, degR[1:], :])
    field.R[sl][..., 1:] *= np.moveaxis(facR, 2, 3)
    degQ = field.vbasis.degrees
    cumQ = np.cumsum(profile.rates_Q, axis=2)
    field.Q[sl][..., 2:] *= np.exp(-dt * cumQ[:, :, degQ[2:]])
    return field
