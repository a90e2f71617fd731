"""Positivity safeguards for the modal solver.

Three pieces that work together: convex decompositions writing each cell
average as a positive combination of face-trace and internal point values,
a conservative scaling limiter pulling those point values into the
admissible set, and time-step bounds (a provable one driven by the
face wave speeds and source weights, plus closed-form corollaries and a
plain signal-speed heuristic).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .basis import R_COMP
from .flux import characteristic_speeds, jump_split_weights, max_signal_speed, pp_wave_speeds
from .mesh import gauss_lobatto_rule, gauss_rule
from .operator import _face_states, _u8cm, fill_ghosts
from .state import (PositivityError, internal_energy, is_admissible,
                    _internal_energy_cm)

EPS_FLOOR = 1e-13

# dispatch switch for the compiled limiter; tests flip it to pin the
# compiled path bitwise against the reference
_USE_KERNELS = kernels.AVAILABLE

# node tabulations keyed by basis geometry and the decomposition points
_NODE_TABLES = {}


def _node_tables_2d(field, pts):
    key = (field.k, field.basis.dx, field.basis.dy, pts.tobytes())
    hit = _NODE_TABLES.get(key)
    if hit is None:
        hit = (field.basis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1]),
               field.vbasis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1]))
        _NODE_TABLES[key] = hit
    return hit


@dataclass(frozen=True)
class ConvexDecomposition:
    """Cell average = sum of positive weights times point values.

    Weights are grouped as: each face trace node (face Gauss node mu on a
    given side) carries w_xface * face_weights[mu] (x-faces) or
    w_yface * face_weights[mu] (y-faces); internal node s carries
    internal_weights[s].  All weights together sum to one.  Node
    coordinates are cell-reference offsets in [-1/2, 1/2]^dim.

    In 1D the face "nodes" are the two cell endpoints with weight w_xface
    each and face_nodes/face_weights are unused (None).
    """

    kind: str
    k: int
    dimension: int
    face_nodes: np.ndarray      # (q,) Gauss nodes along a face, or None in 1D
    face_weights: np.ndarray    # (q,) matching weights (sum 1), or None in 1D
    w_xface: float              # weight of one x-face (whole line), per side
    w_yface: float              # same for y-faces (None in 1D)
    internal_nodes: np.ndarray  # (S, dim) offsets
    internal_weights: np.ndarray  # (S,)
    kappa1: float               # directional splitting weights (1.0 in 1D)
    kappa2: float
    omega: float                # internal-node weight of the optimal kind, else None
    delta: float                # anisotropy (a1*dy - a2*dx)/(a1*dy + a2*dx), None in 1D


def _lobatto_L(k):
    return (k + 3 + 1) // 2  # ceil((k+3)/2)


def _build_1d(kind, k):
    L = _lobatto_L(k)
    gl = gauss_lobatto_rule(L)
    return ConvexDecomposition(
        kind=kind, k=k, dimension=1,
        face_nodes=None, face_weights=None,
        w_xface=gl.weights[0], w_yface=None,
        internal_nodes=gl.nodes[1:-1, None].copy(),
        internal_weights=gl.weights[1:-1].copy(),
        kappa1=1.0, kappa2=None, omega=None, delta=None)


def build_decomposition(kind, k, a1=None, a2=None, dx=1.0, dy=None):
    """Convex decomposition of a P^k cell average on a dx-by-dy cell.

    kind "zhang_shu": tensor Gauss-Lobatto construction, k in {1,2,3}.
    kind "optimal": four face lines plus two internal nodes, k in {2,3};
    k=1 falls back to the Gauss-Lobatto construction with L=2, which is
    already optimal there.  a1/a2 are the directional wave-speed scales
    that set the splitting weights (only their ratio matters).  With
    dy=None the cell is one-dimensional and both kinds coincide with the
    L-point Gauss-Lobatto decomposition.
    """
    if kind not in ("zhang_shu", "optimal"):
        raise ValueError(f"unknown decomposition kind {kind!r}")
    if k not in (1, 2, 3):
        raise ValueError("polynomial degree k must be 1, 2, or 3")
    if dy is None:
        return _build_1d(kind, k)
    if a1 is None or a2 is None or a1 <= 0.0 or a2 <= 0.0:
        raise ValueError("2D decompositions need positive speed scales a1, a2")

    q = k + 1
    rule = gauss_rule(q)
    phi1 = a1 / dx
    phi2 = a2 / dy
    delta = (phi1 - phi2) / (phi1 + phi2)

    if kind == "optimal" and k == 1:
        kind = "zhang_shu"

    if kind == "zhang_shu":
        L = _lobatto_L(k)
        gl = gauss_lobatto_rule(L)
        kappa1 = phi1 / (phi1 + phi2)
        kappa2 = phi2 / (phi1 + phi2)
        w_end = gl.weights[0]
        # interior Gauss-Lobatto nodes tensored with the face Gauss line,
        # once per direction
        nodes = []
        weights = []
        for s in range(1, L - 1):
            for mu in range(q):
                nodes.append((gl.nodes[s], rule.nodes[mu]))
                weights.append(kappa1 * gl.weights[s] * rule.weights[mu])
        for s in range(1, L - 1):
            for mu in range(q):
                nodes.append((rule.nodes[mu], gl.nodes[s]))
                weights.append(kappa2 * gl.weights[s] * rule.weights[mu])
        decomp = ConvexDecomposition(
            kind="zhang_shu", k=k, dimension=2,
            face_nodes=rule.nodes, face_weights=rule.weights,
            w_xface=kappa1 * w_end, w_yface=kappa2 * w_end,
            internal_nodes=np.array(nodes).reshape(-1, 2),
            internal_weights=np.array(weights),
            kappa1=kappa1, kappa2=kappa2, omega=None, delta=delta)
    else:
        phi_star = max(phi1, phi2)
        psi = phi1 + phi2 + 2.0 * phi_star
        kappa1 = phi1 / psi
        kappa2 = phi2 / psi
        omega = phi_star / psi
        if phi1 >= phi2:
            off = math.sqrt((phi_star - phi2) / phi_star) / (2.0 * math.sqrt(3.0))
            nodes = np.array([[0.0, -off], [0.0, off]])
        else:
            off = math.sqrt((phi_star - phi1) / phi_star) / (2.0 * math.sqrt(3.0))
            nodes = np.array([[-off, 0.0], [off, 0.0]])
        decomp = ConvexDecomposition(
            kind="optimal", k=k, dimension=2,
            face_nodes=rule.nodes, face_weights=rule.weights,
            w_xface=0.5 * kappa1, w_yface=0.5 * kappa2,
            internal_nodes=nodes, internal_weights=np.array([omega, omega]),
            kappa1=kappa1, kappa2=kappa2, omega=omega, delta=delta)

    total = (2.0 * (decomp.w_xface + decomp.w_yface)
             + decomp.internal_weights.sum())
    assert abs(total - 1.0) < 1e-12
    return decomp


def reference_nodes(decomp):
    """All decomposition nodes and weights, flattened.

    Returns (points, weights): points (N, dim) in cell-reference offsets,
    weights (N,) summing to one.  2D face-node order is x-left, x-right,
    y-bottom, y-top (each running through the face Gauss nodes), then the
    internal nodes; the set is mirror-symmetric in each axis.
    """
    if decomp.dimension == 1:
        pts = np.concatenate(([[-0.5], [0.5]], decomp.internal_nodes))
        wts = np.concatenate(([decomp.w_xface, decomp.w_xface],
                              decomp.internal_weights))
        return pts, wts
    t = decomp.face_nodes
    tw = decomp.face_weights
    half = np.full_like(t, 0.5)
    pts = np.concatenate([
        np.stack([-half, t], axis=1),
        np.stack([half, t], axis=1),
        np.stack([t, -half], axis=1),
        np.stack([t, half], axis=1),
        decomp.internal_nodes,
    ])
    wts = np.concatenate([
        decomp.w_xface * tw, decomp.w_xface * tw,
        decomp.w_yface * tw, decomp.w_yface * tw,
        decomp.internal_weights,
    ])
    return pts, wts


def decomposition_nodes(decomp, mesh, cell):
    """Physical coordinates of the decomposition nodes in one cell.

    cell is a zero-based interior index: int for 1D, (i, j) for 2D.
    """
    pts, _ = reference_nodes(decomp)
    if decomp.dimension == 1:
        return mesh.x_centers()[cell] + mesh.dx * pts[:, 0]
    i, j = cell
    out = np.empty_like(pts)
    out[:, 0] = mesh.x_centers()[i] + mesh.dx * pts[:, 0]
    out[:, 1] = mesh.y_centers()[j] + mesh.dy * pts[:, 1]
    return out


def _node_states(field, pts):
    """Conserved states of every interior cell at reference offsets pts."""
    mesh = field.mesh
    if mesh.dimension == 1:
        tab = field.basis.eval_members(2.0 * pts[:, 0])
        vals = np.tensordot(field.R[1:mesh.nx + 1], tab, (2, 0))
        return np.moveaxis(vals, 1, 2)
    stab = field.basis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1])
    vtab = field.vbasis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1])
    return _face_states(field.R[1:mesh.nx + 1, 1:mesh.ny + 1],
                        field.Q[1:mesh.nx + 1, 1:mesh.ny + 1], stab, vtab)


def _node_states_cm(field, pts):
    """_node_states in component-first layout (8, cells..., npts)."""
    mesh = field.mesh
    if mesh.dimension == 1:
        tab = field.basis.eval_members(2.0 * pts[:, 0])
        vals = np.tensordot(field.R[1:mesh.nx + 1], tab, (2, 0))
        return np.ascontiguousarray(np.moveaxis(vals, 1, 0))
    stab = field.basis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1])
    vtab = field.vbasis.eval_members(2.0 * pts[:, 0], 2.0 * pts[:, 1])
    sl = np.s_[1:mesh.nx + 1, 1:mesh.ny + 1]
    return _u8cm(np.tensordot(field.R[sl], stab, (3, 0)),
                 np.tensordot(field.Q[sl], vtab, (2, 0)))


def _fault_cell(ok, avg, what):
    idx = tuple(int(t) for t in np.argwhere(~ok)[0])
    U = avg[idx]
    if U[0] <= 0.0:
        detail = f"rho = {U[0]:.6e}"
    else:
        detail = f"internal energy = {float(internal_energy(U)):.6e}"
    raise PositivityError(
        f"inadmissible cell average {what} at cell {idx}: {detail}",
        where=idx)


def require_admissible_averages(field, context="in cell averages"):
    """Raise the standard positivity fault if any interior average has
    left the admissible set."""
    avg = field.cell_averages()
    ok = is_admissible(avg)
    if not ok.all():
        _fault_cell(ok, avg, context)


def pp_limit(field, decomp, gamma):
    """Scale each cell's deviation so all decomposition-node values are
    admissible, preserving cell averages bit for bit.  Density first
    (theta1), then a second factor (theta2) on the whole state vector for
    internal energy.  Modifies the field in place and returns
    (theta1, theta2) per interior cell; raises if an average is already
    outside the admissible set.
    """
    avg = field.cell_averages()
    ok = is_admissible(avg)
    if not ok.all():
        _fault_cell(ok, avg, "before limiting")

    pts, _ = reference_nodes(decomp)
    mesh = field.mesh
    if mesh.dimension == 2 and _USE_KERNELS:
        stab, vtab = _node_tables_2d(field, pts)
        sl = np.s_[1:mesh.nx + 1, 1:mesh.ny + 1]
        TRn = np.tensordot(field.R[sl], stab, (3, 0))
        TQn = np.tensordot(field.Q[sl], vtab, (2, 0))
        theta1 = np.empty((mesh.nx, mesh.ny))
        theta2 = np.empty((mesh.nx, mesh.ny))
        status = kernels.pp_limit_nodes(TRn, TQn, avg, EPS_FLOOR,
                                        field.R, field.Q,
                                        field.basis.dim, field.vbasis.dim,
                                        theta1, theta2)
        if status == 0:
            return theta1, theta2
        # a density node sat exactly on zero: fall through untouched, the
        # reference path raises there (or resolves it identically)

    U = _node_states_cm(field, pts)
    if mesh.dimension == 1:
        sl = np.s_[1:mesh.nx + 1]
    else:
        sl = np.s_[1:mesh.nx + 1, 1:mesh.ny + 1]

    rho_bar = avg[..., 0]
    eps1 = np.minimum(EPS_FLOOR, rho_bar)
    rho_min = U[0].min(axis=-1)
    need1 = rho_min < eps1
    theta1 = np.ones_like(rho_bar)
    np.divide(rho_bar - eps1, rho_bar - rho_min, out=theta1, where=need1)
    field.R[sl][..., 0, 1:] *= theta1[..., None]
    U[0] = theta1[..., None] * (U[0] - rho_bar[..., None]) \
        + rho_bar[..., None]

    e_bar = internal_energy(avg)
    eps2 = np.minimum(EPS_FLOOR, e_bar)
    e_min = _internal_energy_cm(U).min(axis=-1)
    need2 = e_min < eps2
    theta2 = np.ones_like(e_bar)
    np.divide(e_bar - eps2, e_bar - e_min, out=theta2, where=need2)
    field.R[sl][..., :, 1:] *= theta2[..., None, None]
    if field.Q is not None:
        field.Q[sl][..., 2:] *= theta2[..., None]
    return theta1, theta2


def _two_state_alpha(Ua, Ub, axis, gamma):
    """Outward speed bounds for a cell from its two opposite traces.

    Ua is the trace at the outflow side in +axis (the cell's high face),
    Ub the trace at its low face.  Returns (alpha_minus, alpha_plus): the
    bound entering the high-face term and the low-face term.
    """
    sa = np.sqrt(Ua[..., 0])
    sb = np.sqrt(Ub[..., 0])
    ua = Ua[..., 1 + axis] / Ua[..., 0]
    ub = Ub[..., 1 + axis] / Ub[..., 0]
    wavg = (sa * ua + sb * ub) / (sa + sb)
    bjump = np.linalg.norm(Ua[..., 4:7] - Ub[..., 4:7], axis=-1) / (sa + sb)
    _, Ca, _, _, _ = characteristic_speeds(Ua, axis, gamma)
    _, Cb, _, _, _ = characteristic_speeds(Ub, axis, gamma)
    alpha_minus = np.maximum(ua, wavg) + Ca + bjump
    alpha_plus = np.maximum(-ub, -wavg) + Cb + bjump
    return alpha_minus, alpha_plus


def _face_alphas(field, axis, gamma, roe_surrogate):
    """Per-cell, per-face-node speed bounds alpha for one direction.

    Returns (alpha_high, alpha_low), each shaped like the interior cells
    plus a trailing face-node axis: the bound attached to the cell's
    high-side face (i+1/2) and low-side face (i-1/2) terms of the provable
    time-step restriction.
    """
    mesh = field.mesh
    if mesh.dimension == 1:
        eR = field.basis.eval_members(np.array(1.0))
        eL = field.basis.eval_members(np.array(-1.0))
        Um = np.tensordot(field.R[:mesh.nx + 1], eR, (2, 0))[:, None, :]
        Up = np.tensordot(field.R[1:mesh.nx + 2], eL, (2, 0))[:, None, :]
    else:
        rule = gauss_rule(field.k + 1)
        xi = 2.0 * rule.nodes
        nx, ny = mesh.nx, mesh.ny
        if axis == 0:
            Um = _face_states(field.R[:nx + 1, 1:ny + 1], field.Q[:nx + 1, 1:ny + 1],
                              field.basis.eval_members(1.0, xi),
                              field.vbasis.eval_members(1.0, xi))
            Up = _face_states(field.R[1:, 1:ny + 1], field.Q[1:, 1:ny + 1],
                              field.basis.eval_members(-1.0, xi),
                              field.vbasis.eval_members(-1.0, xi))
        else:
            Um = _face_states(field.R[1:nx + 1, :ny + 1], field.Q[1:nx + 1, :ny + 1],
                              field.basis.eval_members(xi, 1.0),
                              field.vbasis.eval_members(xi, 1.0))
            Up = _face_states(field.R[1:nx + 1, 1:], field.Q[1:nx + 1, 1:],
                              field.basis.eval_members(xi, -1.0),
                              field.vbasis.eval_members(xi, -1.0))
        Um = np.moveaxis(Um, axis, 0)
        Up = np.moveaxis(Up, axis, 0)

    speeds = pp_wave_speeds(Um, Up, axis, gamma, roe_surrogate)
    w_minus, w_plus = jump_split_weights(speeds)
    jump = Up[..., 4 + axis] - Um[..., 4 + axis]
    Bm = w_minus * jump
    Bp = w_plus * jump

    # the cell's own high-face (-) and low-face (+) traces
    Uhigh = Um[1:]
    Ulow = Up[:-1]
    a_minus, a_plus = _two_state_alpha(Uhigh, Ulow, axis, gamma)
    alpha_high = a_minus - speeds.v_minus[1:] \
        + np.abs(Bm[1:]) / np.sqrt(Uhigh[..., 0])
    alpha_low = a_plus + speeds.v_plus[:-1] \
        + np.abs(Bp[:-1]) / np.sqrt(Ulow[..., 0])
    if mesh.dimension == 2:
        alpha_high = np.moveaxis(alpha_high, 0, axis)
        alpha_low = np.moveaxis(alpha_low, 0, axis)
    return alpha_high, alpha_low


def _dt_from_ratios(weight, h, alphas):
    dts = [np.where(a > 0.0, weight * h / np.maximum(a, 1e-300), np.inf).min()
           for a in alphas]
    return float(min(dts))


def pp_cfl_dt(field, gamma, recipe=None, mode="practical", kind="optimal",
              cfl=0.12, decomp=None, roe_surrogate=True):
    """Positivity-safe time step for one forward-Euler (or SSP) stage.

    mode "practical":  cfl / (beta_x/dx + beta_y/dy) with beta the largest
        cell-average signal speed per direction (plain heuristic, no proof).
    mode "theorem":    the provable bound min over cells, faces, and face
        nodes of  w_face * h / alpha, using the decomposition's face
        weights (built from the current speed scales unless `decomp` is
        passed) and the wave-speed/source bounds of the running scheme.
    mode "corollary_zs" / "corollary_opt": closed-form global versions for
        the Gauss-Lobatto and optimal decompositions.

    Every mode except "practical" needs `recipe` to fill ghost cells.
    """
    mesh = field.mesh
    if mode == "practical":
        avg = field.cell_averages()
        bx = float(max_signal_speed(avg, 0, gamma).max())
        if mesh.dimension == 1:
            return cfl / (bx / mesh.dx)
        by = float(max_signal_speed(avg, 1, gamma).max())
        return cfl / (bx / mesh.dx + by / mesh.dy)

    if mode not in ("theorem", "corollary_zs", "corollary_opt"):
        raise ValueError(f"unknown time-step mode {mode!r}")
    if recipe is None:
        raise ValueError(f"mode {mode!r} needs a boundary recipe")
    fill_ghosts(field, recipe)

    ax_high, ax_low = _face_alphas(field, 0, gamma, roe_surrogate)
    a1 = float(max(ax_high.max(), ax_low.max()))
    if mesh.dimension == 1:
        L = _lobatto_L(field.k)
        w_end = gauss_lobatto_rule(L).weights[0]
        if mode == "theorem":
            return _dt_from_ratios(w_end, mesh.dx, [ax_high, ax_low])
        return float(w_end * mesh.dx / a1)

    ay_high, ay_low = _face_alphas(field, 1, gamma, roe_surrogate)
    a2 = float(max(ay_high.max(), ay_low.max()))
    dx, dy = mesh.dx, mesh.dy

    if mode == "theorem":
        if decomp is None:
            decomp = build_decomposition(kind, field.k, a1, a2, dx, dy)
        dt_x = _dt_from_ratios(decomp.w_xface, dx, [ax_high, ax_low])
        dt_y = _dt_from_ratios(decomp.w_yface, dy, [ay_high, ay_low])
        return min(dt_x, dt_y)
    if mode == "corollary_zs":
        w_end = gauss_lobatto_rule(_lobatto_L(field.k)).weights[0]
        return float(dx * dy * w_end / (a2 * dx + a1 * dy))
    # corollary_opt
    if field.k == 1:
        w_end = gauss_lobatto_rule(2).weights[0]
        return float(dx * dy * w_end / (a2 * dx + a1 * dy))
    return float(dx * dy / max(6.0 * a1 * dy + 2.0 * a2 * dx,
                               6.0 * a2 * dx + 2.0 * a1 * dy))


def cfl_weight_bound(delta, k):
    """Largest provable dt * (a1/dx + a2/dy) for anisotropy delta.

    delta = (a1/dx - a2/dy)/(a1/dx + a2/dy) in [-1, 1].  Degree 1 uses the
    two-point Gauss-Lobatto decomposition (weight 1/2, independent of
    delta); degrees 2 and 3 use the optimal decomposition.  Degrees 4 and
    5 have a known closed form via an arccos root; they are outside the
    supported degree range and not implemented.
    """
    if not -1.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [-1, 1]")
    if k == 1:
        return float(gauss_lobatto_rule(2).weights[0])
    if k in (2, 3):
        phi1 = 0.5 * (1.0 + delta)
        phi2 = 0.5 * (1.0 - delta)
        return 1.0 / max(6.0 * phi1 + 2.0 * phi2, 6.0 * phi2 + 2.0 * phi1)
    raise NotImplementedError("degree-4/5 weight bound not implemented")


def verify_cell_average_pp(field):
    """List interior cells whose averages are outside the admissible set.

    Returns [(cell_index, quantity, value), ...]; empty means all good.
    """
    avg = field.cell_averages()
    ok = is_admissible(avg)
    report = []
    for raw in np.argwhere(~ok):
        idx = tuple(int(t) for t in raw)
        U = avg[idx]
        if U[0] <= 0.0:
            report.append((idx, "rho", float(U[0])))
        else:
            report.append((idx, "internal_energy", float(internal_energy(U))))
    return report
