"""Benchmark catalog: standard MHD test problems with their boundary
recipes, plus integral error norms and convergence tables for the smooth
cases.

Initial-condition functions return primitive states (rho, u, B, p) and
broadcast over coordinate arrays, so the same function serves projection
and (for the smooth waves) the exact solution at any time.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .march import MarchOptions, run
from .mesh import build_mesh, gauss_rule
from .operator import (BoundaryRecipe, dirichlet, inflow, outflow,
                       reflecting)
from .positivity import _node_states
from .state import conserved_from_primitive


@dataclass(frozen=True)
class Problem:
    name: str
    dimension: int
    bounds: Tuple[Tuple[float, float], ...]
    gamma: float
    ic: Callable
    recipe_factory: Callable
    t_end: float
    exact: Optional[Callable] = None
    default_counts: Tuple[int, ...] = ()

    def recipe(self, mesh):
        return self.recipe_factory(mesh)

    def default_mesh(self):
        return build_mesh(self.bounds, self.default_counts)


def _prim(x, *rest, **named):
    """Zero-filled primitive array broadcast over the coordinate arrays."""
    shape = np.broadcast_shapes(*(np.shape(a) for a in (x,) + rest))
    out = np.zeros(shape + (8,))
    for idx, val in named.items():
        out[..., int(idx[1])] = val
    return out


def _sine1d_exact(x, t=0.0):
    # rho rides the u1=1 advection; everything else is uniform
    return _prim(x, c0=1.0 + 0.99 * np.sin(x - t), c1=1.0, c4=0.1, c7=1.0)


def _sine2d_exact(x, y, t=0.0):
    return _prim(x, y, c0=1.0 + 0.99 * np.sin(x + y - 2.0 * t),
                 c1=1.0, c2=1.0, c4=0.1, c5=0.1, c7=1.0)


def _riemann_ic(left, right, split):
    left = np.asarray(left, float)
    right = np.asarray(right, float)

    def ic(x):
        return np.where((np.asarray(x) < split)[..., None], left, right)

    return ic


def _orszag_tang_ic(x, y):
    g = 5.0 / 3.0
    return _prim(x, y, c0=g * g, c1=-np.sin(y), c2=np.sin(x), c7=g,
                 c4=-np.sin(y), c5=np.sin(2.0 * x))


def _rotor_ic(x, y):
    r0, r1 = 0.1, 0.115
    dx, dy = np.asarray(x) - 0.5, np.asarray(y) - 0.5
    r = np.hypot(dx, dy)
    f = (r1 - r) / (r1 - r0)
    rs = np.maximum(r, 1e-300)  # taper formulas only read r in (r0, r1)
    rho = np.where(r < r0, 10.0, np.where(r < r1, 1.0 + 9.0 * f, 1.0))
    u1 = np.where(r < r0, -dy / r0, np.where(r < r1, -f * dy / rs, 0.0))
    u2 = np.where(r < r0, dx / r0, np.where(r < r1, f * dx / rs, 0.0))
    return _prim(x, y, c0=rho, c1=u1, c2=u2,
                 c4=2.5 / math.sqrt(4.0 * math.pi), c7=0.5)


_CLOUD_LEFT = np.array([3.86859, 0.0, 0.0, 0.0,
                        0.0, 2.1826182, -2.1826182, 167.345])
_CLOUD_RIGHT = np.array([1.0, -11.2536, 0.0, 0.0,
                         0.0, 0.56418958, 0.56418958, 1.0])


def _shock_cloud_ic(x, y):
    prim = np.where((np.asarray(x) < 0.6)[..., None], _CLOUD_LEFT,
                    np.broadcast_to(_CLOUD_RIGHT,
                                    np.broadcast_shapes(np.shape(x),
                                                        np.shape(y)) + (8,)))
    in_cloud = np.hypot(np.asarray(x) - 0.8, np.asarray(y) - 0.5) < 0.15
    prim[..., 0] = np.where(in_cloud, 10.0, prim[..., 0])
    return prim


def _blast_ic(x, y):
    p = np.where(np.hypot(np.asarray(x) - 1.5, np.asarray(y)) < 0.1, 10.0, 0.1)
    b = 1.0 / math.sqrt(2.0)
    return _prim(x, y, c0=1.0, c4=b, c5=b, c7=p)


def _jet_ambient_ic(b2, gamma):
    def ic(x, y):
        return _prim(x, y, c0=0.1 * gamma, c5=b2, c7=1.0)

    return ic


def _jet_recipe(u2, b2, gamma):
    jet = conserved_from_primitive(
        np.array([gamma, 0.0, u2, 0.0, 0.0, b2, 0.0, 1.0]), gamma)

    def factory(mesh):
        return BoundaryRecipe(left=reflecting(0), right=outflow(),
                              bottom=inflow((-0.05, 0.05), jet),
                              top=outflow())

    return factory


def _shock_cloud_recipe(gamma):
    fixed = conserved_from_primitive(_CLOUD_RIGHT, gamma)

    def factory(mesh):
        # the right state streams in supersonically, so pinning the full
        # state there is well-posed
        return BoundaryRecipe(left=outflow(), right=dirichlet(fixed),
                              bottom=outflow(), top=outflow())

    return factory


def _blast_recipe(gamma):
    ambient = conserved_from_primitive(_blast_ic(1.0, 0.5), gamma)

    def factory(mesh):
        return BoundaryRecipe.all_dirichlet(ambient, 2)

    return factory


TWO_PI = 2.0 * math.pi
_SQ4PI = math.sqrt(4.0 * math.pi)


def _catalog():
    def entry(**kw):
        return lambda: Problem(**kw)

    rp = _riemann_ic
    return {
        "sine1d": entry(
            name="sine1d", dimension=1, bounds=((0.0, TWO_PI),), gamma=1.4,
            ic=lambda x: _sine1d_exact(x, 0.0),
            recipe_factory=lambda mesh: BoundaryRecipe.all_periodic(1),
            t_end=0.1, exact=_sine1d_exact, default_counts=(100,)),
        "shocktube1": entry(
            name="shocktube1", dimension=1, bounds=((0.0, 1.0),), gamma=5.0 / 3.0,
            ic=rp([1.08, 1.2, 0.01, 0.5, 2.0 / _SQ4PI, 3.6 / _SQ4PI,
                   2.0 / _SQ4PI, 0.95],
                  [1.0, 0.0, 0.0, 0.0, 2.0 / _SQ4PI, 4.0 / _SQ4PI,
                   2.0 / _SQ4PI, 1.0], 0.5),
            recipe_factory=lambda mesh: BoundaryRecipe.all_outflow(1),
            t_end=0.2, default_counts=(800,)),
        "shocktube2": entry(
            name="shocktube2", dimension=1, bounds=((0.0, 1.0),), gamma=5.0 / 3.0,
            ic=rp([1.0, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 1.0],
                  [0.3, 0.0, 0.0, 1.0, 0.7, 1.0, 0.0, 0.2], 0.5),
            recipe_factory=lambda mesh: BoundaryRecipe.all_outflow(1),
            t_end=0.16, default_counts=(800,)),
        "briowu": entry(
            name="briowu", dimension=1, bounds=((-0.5, 0.5),), gamma=2.0,
            ic=rp([1.0, 0.0, 0.0, 0.0, 0.75, 1.0, 0.0, 1.0],
                  [0.125, 0.0, 0.0, 0.0, 0.75, -1.0, 0.0, 0.1], 0.0),
            recipe_factory=lambda mesh: BoundaryRecipe.all_outflow(1),
            t_end=0.1, default_counts=(800,)),
        "leblanc_mhd": entry(
            name="leblanc_mhd", dimension=1, bounds=((-10.0, 10.0),), gamma=1.4,
            ic=rp([2.0, 0.0, 0.0, 0.0, 0.0, 5000.0, 5000.0, 1e9],
                  [0.001, 0.0, 0.0, 0.0, 0.0, 5000.0, 5000.0, 1.0], 0.0),
            recipe_factory=lambda mesh: BoundaryRecipe.all_outflow(1),
            t_end=3e-5, default_counts=(2000,)),
        "sine2d": entry(
            name="sine2d", dimension=2,
            bounds=((0.0, TWO_PI), (0.0, TWO_PI)), gamma=1.4,
            ic=lambda x, y: _sine2d_exact(x, y, 0.0),
            recipe_factory=lambda mesh: BoundaryRecipe.all_periodic(2),
            t_end=0.1, exact=_sine2d_exact, default_counts=(30, 30)),
        "orszag_tang": entry(
            name="orszag_tang", dimension=2,
            bounds=((0.0, TWO_PI), (0.0, TWO_PI)), gamma=5.0 / 3.0,
            ic=_orszag_tang_ic,
            recipe_factory=lambda mesh: BoundaryRecipe.all_periodic(2),
            t_end=4.0, default_counts=(400, 400)),
        "rotor": entry(
            name="rotor", dimension=2, bounds=((0.0, 1.0), (0.0, 1.0)),
            gamma=5.0 / 3.0, ic=_rotor_ic,
            recipe_factory=lambda mesh: BoundaryRecipe.all_periodic(2),
            t_end=0.295, default_counts=(400, 400)),
        "shock_cloud": entry(
            name="shock_cloud", dimension=2, bounds=((0.0, 1.0), (0.0, 1.0)),
            gamma=5.0 / 3.0, ic=_shock_cloud_ic,
            recipe_factory=_shock_cloud_recipe(5.0 / 3.0),
            t_end=0.06, default_counts=(400, 400)),
        "blast": entry(
            name="blast", dimension=2, bounds=((1.0, 2.0), (-0.5, 0.5)),
            gamma=5.0 / 3.0, ic=_blast_ic,
            recipe_factory=_blast_recipe(5.0 / 3.0),
            t_end=0.2, default_counts=(400, 400)),
        "jet_m800": entry(
            name="jet_m800", dimension=2, bounds=((0.0, 0.5), (0.0, 1.5)),
            gamma=1.4, ic=_jet_ambient_ic(math.sqrt(2000.0), 1.4),
            recipe_factory=_jet_recipe(800.0, math.sqrt(2000.0), 1.4),
            t_end=0.002, default_counts=(200, 600)),
        "jet_m10000": entry(
            name="jet_m10000", dimension=2, bounds=((0.0, 0.5), (0.0, 1.5)),
            gamma=1.4, ic=_jet_ambient_ic(math.sqrt(20000.0), 1.4),
            recipe_factory=_jet_recipe(10000.0, math.sqrt(20000.0), 1.4),
            t_end=1.5e-4, default_counts=(200, 600)),
    }


_CATALOG = _catalog()
CATALOG_NAMES = tuple(_CATALOG)


def make_problem(name):
    """Look up a benchmark by name. Raises ValueError for unknown names."""
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose one of {', '.join(_CATALOG)}")
    return builder()


def error_norms(field, exact, t, gamma, component=0):
    """Integral error norms (l1, l2, linf) of one conserved component.

    The numerical solution and the exact primitive-state function are both
    sampled on the per-cell tensor Gauss grid of the projection rule; l1
    and l2 integrate over the domain without volume normalization, linf is
    the max over the same grid.
    """
    mesh = field.mesh
    rule = gauss_rule(field.k + 2)
    if mesh.dimension == 1:
        pts = rule.nodes[:, None]
        w = rule.weights
        xq = mesh.x_centers()[:, None] + mesh.dx * rule.nodes[None, :]
        ref = exact(xq, t)
        vol = mesh.dx
    else:
        xi, eta = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        pts = np.column_stack([xi.ravel(), eta.ravel()])
        w = np.outer(rule.weights, rule.weights).ravel()
        xq = mesh.x_centers()[:, None, None] + mesh.dx * pts[None, None, :, 0]
        yq = mesh.y_centers()[None, :, None] + mesh.dy * pts[None, None, :, 1]
        ref = exact(xq, yq, t)
        vol = mesh.dx * mesh.dy
    num = _node_states(field, pts)[..., component]
    want = conserved_from_primitive(ref, gamma)[..., component]
    err = np.abs(num - want)
    l1 = float(np.sum(err * w) * vol)
    l2 = float(math.sqrt(np.sum(err * err * w) * vol))
    linf = float(err.max())
    return l1, l2, linf


def convergence_table(problem, counts, options=None, t_end=None,
                      component=0):
    """Run the smooth problem on successively refined meshes and tabulate
    errors with observed orders between consecutive rows."""
    if problem.exact is None:
        raise ValueError(f"{problem.name} has no exact solution")
    counts = list(counts)
    if len(counts) < 2:
        raise ValueError("need at least two meshes for a convergence table")
    if options is None:
        options = MarchOptions()
    horizon = problem.t_end if t_end is None else t_end

    rows = []
    prev = None
    for n in counts:
        mesh = build_mesh(problem.bounds, (n,) * problem.dimension)
        state = run(problem, mesh, options, t_end=horizon)
        l1, l2, linf = error_norms(state.field, problem.exact, horizon,
                                   problem.gamma, component)
        row = {"cells": n, "l1": l1, "l2": l2, "linf": linf}
        for key in ("l1", "l2", "linf"):
            order = None
            if prev is not None and n != prev["cells"]:
                if prev[key] > 0.0 and row[key] > 0.0:
                    order = math.log(prev[key] / row[key]) / math.log(n / prev["cells"])
            row[key + "_order"] = order
        rows.append(row)
        prev = row
    return rows


def format_convergence_table(rows):
    """Plain-text table; undefined orders print as '-'."""
    head = (f"{'cells':>8}  {'l1':>12} {'order':>7}  {'l2':>12} {'order':>7}"
            f"  {'linf':>12} {'order':>7}")
    lines = [head]
    for r in rows:
        cells = []
        for key in ("l1", "l2", "linf"):
            order = r[key + "_order"]
            txt = "-" if order is None else f"{order:.4f}"
            cells.append(f"{r[key]:12.4e} {txt:>7}")
        lines.append(f"{r['cells']:>8d}  " + "  ".join(cells))
    return "\n".join(lines)
