"""Third-order SSP Runge-Kutta marching with the modal damping filter and
the positivity limiter applied after every stage."""

import csv
import time as _time
from dataclasses import dataclass, field as _field

import numpy as np

from .basis import R_COMP, project_initial
from .flux import max_signal_speed
from .oe import damping_rates, oe_apply
from .operator import assemble, fill_ghosts
from .positivity import (build_decomposition, pp_cfl_dt, pp_limit,
                         reference_nodes, require_admissible_averages,
                         _node_states)
from .state import PositivityError, is_admissible, primitive_from_conserved


@dataclass(frozen=True)
class MarchOptions:
    """Numerical knobs of the marching loop (physics lives in the problem)."""
    k: int = 2
    cfl: float = 0.12
    dt_mode: str = "practical"       # practical | theorem | corollary_zs | corollary_opt
    decomposition: str = "optimal"   # limiter node set / theorem weights
    oe: bool = True                  # modal damping between stages
    pp: bool = True                  # scaling limiter between stages
    source: bool = True              # upwind source in the mean update
    filter_initial: bool = True      # start from filtered initial data
    roe_surrogate: bool = True
    debug_checks: bool = False       # assert node admissibility after stages


@dataclass
class RunState:
    field: object
    recipe: object
    gamma: float
    time: float = 0.0
    step: int = 0
    dt_history: list = _field(default_factory=list)
    limiter_cells: int = 0            # cumulative cells rescaled by the limiter
    last_limiter_cells: int = 0       # same, most recent step only
    ledger: list = _field(default_factory=list)  # (time, mass, mx, my, mz, energy)


def conserved_totals(field):
    """Domain integrals of the conserved vector from the cell averages."""
    mesh = field.mesh
    avg = field.cell_averages()
    vol = mesh.dx * (mesh.dy if mesh.dimension == 2 else 1.0)
    axes = tuple(range(mesh.dimension))
    return avg.sum(axis=axes) * vol


def _interior_finite(field):
    mesh = field.mesh
    if mesh.dimension == 1:
        ok = np.isfinite(field.R[1:mesh.nx + 1]).all()
    else:
        sl = np.s_[1:mesh.nx + 1, 1:mesh.ny + 1]
        ok = np.isfinite(field.R[sl]).all() and np.isfinite(field.Q[sl]).all()
    return bool(ok)


def _decomposition_for(field, options, gamma):
    mesh = field.mesh
    if mesh.dimension == 1:
        return build_decomposition(options.decomposition, field.k, dx=mesh.dx)
    avg = field.cell_averages()
    a1 = float(max_signal_speed(avg, 0, gamma).max())
    a2 = float(max_signal_speed(avg, 1, gamma).max())
    return build_decomposition(options.decomposition, field.k, a1=a1, a2=a2,
                               dx=mesh.dx, dy=mesh.dy)


def _overwrite_mode0(res, L, mesh):
    """Replace the evolved means with the source-augmented average operator."""
    resR, resQ = res
    if mesh.dimension == 1:
        resR[1:mesh.nx + 1, :, 0] = L
        return
    sl = np.s_[1:mesh.nx + 1, 1:mesh.ny + 1]
    resR[sl][..., :, 0] = L[..., R_COMP]
    resQ[sl][..., 0] = L[..., 5]
    resQ[sl][..., 1] = L[..., 4]


def _postprocess_stage(run, out, dt, options, decomp):
    fill_ghosts(out, run.recipe)
    require_admissible_averages(out, "after Euler stage")
    if options.oe:
        profile = damping_rates(out, run.gamma)
        oe_apply(out, profile, dt)
    if options.pp:
        theta1, theta2 = pp_limit(out, decomp, run.gamma)
        hits = int(((theta1 < 1.0) | (theta2 < 1.0)).sum())
        run.limiter_cells += hits
        run.last_limiter_cells += hits
        if options.debug_checks:
            pts, _ = reference_nodes(decomp)
            assert is_admissible(_node_states(out, pts)).all()
    return out


def _stage(run, base, stage, w, dt, options, decomp):
    """out = w*base + (1-w)*(stage + dt*L(stage)), then damping + limiting."""
    res, L = assemble(stage, run.recipe, run.gamma, options.roe_surrogate)
    if options.source:
        # without this the means evolve purely conservatively and the
        # admissibility guarantee is lost (ablation hook)
        _overwrite_mode0(res, L, stage.mesh)
    out = stage.copy()
    out.R[...] = w * base.R + (1.0 - w) * (stage.R + dt * res.R)
    if out.Q is not None:
        out.Q[...] = w * base.Q + (1.0 - w) * (stage.Q + dt * res.Q)
    return _postprocess_stage(run, out, dt, options, decomp)


def rk3_step(run, dt, options, decomp=None):
    """One full SSP-RK3 step: three Euler-type stages, each followed by the
    damping filter and the limiter; the evolved means come from the
    source-augmented average operator at every stage."""
    if decomp is None:
        decomp = _decomposition_for(run.field, options, run.gamma)
    run.last_limiter_cells = 0
    base = run.field
    s1 = _stage(run, base, base, 0.0, dt, options, decomp)
    s2 = _stage(run, base, s1, 0.75, dt, options, decomp)
    s3 = _stage(run, base, s2, 1.0 / 3.0, dt, options, decomp)
    if not _interior_finite(s3):
        raise RuntimeError("nonfinite solution coefficients")
    run.field = s3
    run.time += dt
    run.step += 1
    run.dt_history.append(dt)
    run.ledger.append((run.time, *conserved_totals(s3)[[0, 1, 2, 3, 7]]))
    return run


def prepare(problem, mesh, options):
    """Project the initial data and apply the startup filtering/limiting."""
    field = project_initial(problem.ic, mesh, options.k, problem.gamma)
    recipe = problem.recipe(mesh)
    run = RunState(field=field, recipe=recipe, gamma=problem.gamma)
    decomp = _decomposition_for(field, options, run.gamma)
    if options.oe and options.filter_initial:
        fill_ghosts(field, recipe)
        dt0 = pp_cfl_dt(field, run.gamma, cfl=options.cfl)
        oe_apply(field, damping_rates(field, run.gamma), dt0)
    if options.pp:
        pp_limit(field, decomp, run.gamma)
    run.ledger.append((0.0, *conserved_totals(field)[[0, 1, 2, 3, 7]]))
    return run


class _Diagnostics:
    COLUMNS = ["step", "time", "dt", "min_rho", "min_p", "limiter_cells",
               "mass", "momentum_x", "momentum_y", "momentum_z", "energy"]

    def __init__(self, path):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(self.COLUMNS)

    def record(self, run, dt):
        avg = run.field.cell_averages()
        prim, _ = primitive_from_conserved(avg, run.gamma)
        totals = conserved_totals(run.field)
        self.writer.writerow([
            run.step, repr(run.time), repr(dt),
            repr(float(avg[..., 0].min())), repr(float(prim[..., 7].min())),
            run.last_limiter_cells,
            repr(float(totals[0])), repr(float(totals[1])),
            repr(float(totals[2])), repr(float(totals[3])),
            repr(float(totals[7]))])

    def close(self):
        self.fh.close()


def run(problem, mesh, options=MarchOptions(), t_end=None, snapshot_times=(),
        snapshot_every=0, on_snapshot=None, diagnostics=None, max_steps=None):
    """March a problem to t_end.

    Emits the state through on_snapshot(run) at the requested times (the
    step size is clipped so they are hit exactly), every `snapshot_every`
    steps if nonzero, and always at t_end.  `diagnostics` names a CSV file
    receiving one row per step.  Returns the final RunState.
    """
    if t_end is None:
        t_end = problem.t_end
    start = _time.perf_counter()
    state = prepare(problem, mesh, options)
    diag = _Diagnostics(diagnostics) if diagnostics else None
    pending = sorted({float(t) for t in snapshot_times if 0.0 <= t <= t_end})
    last_emit = [None]

    def emit():
        if on_snapshot is not None and last_emit[0] != (state.step, state.time):
            last_emit[0] = (state.step, state.time)
            on_snapshot(state)

    if pending and pending[0] == 0.0:
        pending.pop(0)
        emit()
    try:
        while state.time < t_end:
            decomp = _decomposition_for(state.field, options, state.gamma)
            dt = pp_cfl_dt(state.field, state.gamma, state.recipe,
                           mode=options.dt_mode, kind=options.decomposition,
                           cfl=options.cfl, decomp=decomp,
                           roe_surrogate=options.roe_surrogate)
            horizon = pending[0] if pending else t_end
            clipped = state.time + dt >= horizon
            if clipped:
                dt = horizon - state.time
            rk3_step(state, dt, options, decomp)
            if clipped:
                state.time = horizon
            if diag is not None:
                diag.record(state, dt)
            while pending and state.time >= pending[0]:
                pending.pop(0)
                emit()
            if snapshot_every and state.step % snapshot_every == 0 \
                    and state.time < t_end:
                emit()
            if max_steps is not None and state.step >= max_steps:
                break
    except (PositivityError, RuntimeError, FloatingPointError) as err:
        wall = _time.perf_counter() - start
        raise type(err)(
            f"aborted at step {state.step}, t = {state.time:.8g} "
            f"({wall:.1f}s wall): {err}") from err
    finally:
        if diag is not None:
            diag.close()
    emit()
    return state
