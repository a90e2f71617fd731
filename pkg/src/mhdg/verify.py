"""Randomized single-step admissibility trials.

Each trial draws a random piecewise-polynomial field whose node values the
limiter has made admissible (the hypothesis of the provable mean-update
bound), takes one forward-Euler update of the cell averages at the
theorem-mode time step, and checks that every updated average is still
admissible. Densities and pressures are drawn log-uniformly down to
near-vacuum 1e-10, plasma beta down to 1e-8, so the magnetically dominated
corner gets hammered hardest.
"""

from dataclasses import dataclass

import numpy as np

from .basis import R_COMP, SolutionField
from .flux import max_signal_speed
from .mesh import build_mesh
from .operator import BoundaryRecipe, assemble
from .positivity import build_decomposition, pp_cfl_dt, pp_limit
from .state import internal_energy, is_admissible

GAMMAS = (1.4, 5.0 / 3.0, 2.0)


@dataclass
class TrialReport:
    samples: int = 0
    violations: int = 0
    by_dimension: dict = None
    min_density: float = np.inf     # over updated averages
    min_internal: float = np.inf    # internal energy, updated averages
    min_dt: float = np.inf
    max_dt: float = 0.0

    def __str__(self):
        lines = [f"trials:        {self.samples}",
                 f"violations:    {self.violations}"]
        for dim, (n, bad) in sorted(self.by_dimension.items()):
            lines.append(f"  {dim}D:          {n} trials, {bad} violations")
        lines += [f"min density:   {self.min_density:.3e}",
                  f"min internal:  {self.min_internal:.3e}",
                  f"dt range:      [{self.min_dt:.3e}, {self.max_dt:.3e}]"]
        return "\n".join(lines)


def _random_unit(rng, shape):
    v = rng.normal(size=shape + (3,))
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    n[n == 0.0] = 1.0
    return v / n


def random_admissible_averages(rng, shape, gamma):
    """Conserved states with log-uniform density/pressure in [1e-10, 1],
    Mach numbers up to 10, and plasma beta log-uniform in [1e-8, 1e4]."""
    rho = 10.0 ** rng.uniform(-10.0, 0.0, shape)
    p = 10.0 ** rng.uniform(-10.0, 0.0, shape)
    sound = np.sqrt(gamma * p / rho)
    speed = rng.uniform(0.0, 10.0, shape) * sound
    u = speed[..., None] * _random_unit(rng, shape)
    beta = 10.0 ** rng.uniform(-8.0, 4.0, shape)
    bmag = np.sqrt(2.0 * p / beta)
    B = bmag[..., None] * _random_unit(rng, shape)
    cons = np.empty(shape + (8,))
    cons[..., 0] = rho
    cons[..., 1:4] = rho[..., None] * u
    cons[..., 4:7] = B
    cons[..., 7] = (p / (gamma - 1.0)
                    + 0.5 * rho * speed ** 2 + 0.5 * bmag ** 2)
    return cons


def random_field(rng, mesh, k, gamma):
    """Random modal field with admissible averages and random higher modes
    scaled to the local state magnitude (the limiter trims them later)."""
    fld = SolutionField.zeros(mesh, k)
    sl = fld.interior
    if mesh.dimension == 1:
        avg = random_admissible_averages(rng, (mesh.nx,), gamma)
        fld.R[sl][..., 0] = avg
        scale = np.abs(avg)[..., None]
        nhi = fld.R.shape[-1] - 1
        fld.R[sl][..., 1:] = 0.3 * scale * rng.normal(
            size=avg.shape + (nhi,))
        fld.R[sl][:, 4, 1:] = 0.0  # B1 stays locally constant
        return fld
    avg = random_admissible_averages(rng, (mesh.nx, mesh.ny), gamma)
    fld.R[sl][..., 0] = avg[..., R_COMP]
    scale = np.abs(avg[..., R_COMP])[..., None]
    nhi = fld.R.shape[-1] - 1
    fld.R[sl][..., 1:] = 0.3 * scale * rng.normal(
        size=scale.shape[:-1] + (nhi,))
    fld.Q[sl][..., 0] = avg[..., 5]
    fld.Q[sl][..., 1] = avg[..., 4]
    bscale = np.linalg.norm(avg[..., 4:6], axis=-1)[..., None]
    nq = fld.Q.shape[-1] - 2
    fld.Q[sl][..., 2:] = 0.3 * bscale * rng.normal(
        size=bscale.shape[:-1] + (nq,))
    return fld


def _trial_mesh(dimension):
    if dimension == 1:
        return build_mesh([(0.0, 1.0)], [6])
    return build_mesh([(0.0, 1.0), (0.0, 1.0)], [4, 4])


def euler_mean_trial(rng, dimension, k, gamma):
    """One randomized field, one Euler step of the averages at theorem dt.

    Returns (updated averages, dt)."""
    mesh = _trial_mesh(dimension)
    recipe = BoundaryRecipe.all_periodic(dimension)
    fld = random_field(rng, mesh, k, gamma)
    avg = fld.cell_averages()
    if dimension == 1:
        decomp = build_decomposition("optimal", k, dx=mesh.dx)
    else:
        a1 = float(max_signal_speed(avg, 0, gamma).max())
        a2 = float(max_signal_speed(avg, 1, gamma).max())
        decomp = build_decomposition("optimal", k, a1=a1, a2=a2,
                                     dx=mesh.dx, dy=mesh.dy)
    pp_limit(fld, decomp, gamma)
    dt = pp_cfl_dt(fld, gamma, recipe, mode="theorem", kind="optimal",
                   decomp=decomp)
    _, L = assemble(fld, recipe, gamma)
    return fld.cell_averages() + dt * L, dt


def theorem_trials(samples, seed=0, k=2):
    """Run `samples` randomized trials, alternating 1D and 2D."""
    rng = np.random.default_rng(seed)
    report = TrialReport(by_dimension={1: [0, 0], 2: [0, 0]})
    for i in range(samples):
        dimension = 1 + i % 2
        gamma = GAMMAS[i % len(GAMMAS)]
        updated, dt = euler_mean_trial(rng, dimension, k, gamma)
        ok = is_admissible(updated)
        bad = int(ok.size - ok.sum())
        report.samples += 1
        report.by_dimension[dimension][0] += 1
        if bad:
            report.violations += 1
            report.by_dimension[dimension][1] += 1
        report.min_density = min(report.min_density,
                                 float(updated[..., 0].min()))
        report.min_internal = min(report.min_internal,
                                  float(internal_energy(updated).min()))
        report.min_dt = min(report.min_dt, dt)
        report.max_dt = max(report.max_dt, dt)
    report.by_dimension = {d: tuple(v)
                           for d, v in report.by_dimension.items()}
    return report
