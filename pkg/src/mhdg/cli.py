"""Command line entry points.

Verbs: run (config-file driven), bench run / bench converge (catalog
harness), converge (alias of bench converge), verify-pp (randomized
admissibility trials), filter (apply the modal damping filter to a
snapshot). Exit codes: 0 success, 2 positivity fault, 3 configuration
error.
"""

import csv
import functools
import sys
from pathlib import Path

import click

from .config import CFL_MODES, ConfigError, load_config
from .march import MarchOptions, run as march_run
from .mesh import build_mesh
from .oe import damping_rates, oe_apply
from .operator import BoundaryRecipe, fill_ghosts
from .positivity import pp_cfl_dt
from .problems import (CATALOG_NAMES, convergence_table,
                       format_convergence_table, make_problem)
from .snapshots import read_modal, write_csv, write_grid, write_modal
from .state import PositivityError
from .verify import theorem_trials

EXIT_PP_FAULT = 2
EXIT_CONFIG = 3


def _guarded(fn):
    """Map solver/config failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as err:
            click.echo(f"config error: {err}", err=True)
            sys.exit(EXIT_CONFIG)
        except ValueError as err:
            click.echo(f"config error: {err}", err=True)
            sys.exit(EXIT_CONFIG)
        except PositivityError as err:
            click.echo(f"positivity fault: {err}", err=True)
            sys.exit(EXIT_PP_FAULT)
        except (RuntimeError, FloatingPointError) as err:
            click.echo(f"run failed: {err}", err=True)
            sys.exit(1)

    return wrapper


def _parse_counts(text):
    try:
        counts = tuple(int(p) for p in str(text).split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")
    if len(counts) not in (1, 2) or any(n < 1 for n in counts):
        raise ConfigError(f"bad cell counts {text!r}")
    return counts


def _emit_snapshots(state, outdir, tag):
    field, t, gamma = state.field, state.time, state.gamma
    write_modal(field, t, gamma, outdir / f"snap_{tag}.mhdm")
    write_csv(field, t, gamma, outdir / f"snap_{tag}.csv")
    if field.mesh.dimension == 2:
        write_grid(field, t, gamma, outdir / f"snap_{tag}.vtk")


@click.group()
def main():
    """Structured-mesh DG solver for ideal compressible MHD."""


@main.command("run")
@click.argument("config_file", type=click.Path())
@click.option("--t-end", type=float, default=None,
              help="Override the problem's final time.")
@click.option("--max-steps", type=int, default=None)
@_guarded
def run_cmd(config_file, t_end, max_steps):
    """March the problem described by a key = value config file."""
    cfg = load_config(config_file)
    problem = make_problem(cfg.problem)
    mesh = (build_mesh(problem.bounds, cfg.cells) if cfg.cells
            else problem.default_mesh())
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    def on_snapshot(state):
        _emit_snapshots(state, outdir, f"{state.step:06d}")

    state = march_run(problem, mesh, cfg.march_options(), t_end=t_end,
                      snapshot_times=cfg.snapshot_times,
                      on_snapshot=on_snapshot,
                      diagnostics=outdir / "diagnostics.csv",
                      max_steps=max_steps)
    click.echo(f"{cfg.problem}: {state.step} steps to t = {state.time:g}, "
               f"outputs in {outdir}")


@main.group()
def bench():
    """Catalog problem harness."""


@bench.command("run")
@click.argument("name", type=click.Choice(CATALOG_NAMES))
@click.option("--cells", required=True,
              help="Cell counts, e.g. 800 or 128,128.")
@click.option("--k", type=click.IntRange(1, 3), default=2)
@click.option("--t-end", type=float, default=None)
@click.option("--cfl", type=float, default=0.12)
@click.option("--cfl-mode", type=click.Choice(CFL_MODES), default="practical")
@click.option("--out", type=click.Path(), default=None,
              help="Directory for diagnostics and the final snapshot.")
@click.option("--max-steps", type=int, default=None)
@_guarded
def bench_run(name, cells, k, t_end, cfl, cfl_mode, out, max_steps):
    """Run one catalog problem and report a one-line summary."""
    problem = make_problem(name)
    mesh = build_mesh(problem.bounds, _parse_counts(cells))
    options = MarchOptions(k=k, cfl=cfl, dt_mode=cfl_mode)
    outdir = None
    if out is not None:
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
    state = march_run(problem, mesh, options, t_end=t_end,
                      diagnostics=None if outdir is None
                      else outdir / "diagnostics.csv",
                      max_steps=max_steps)
    avg = state.field.cell_averages()
    click.echo(f"{name}: {state.step} steps to t = {state.time:g}, "
               f"min rho = {avg[..., 0].min():.6e}, "
               f"limiter touched {state.limiter_cells} cell-stages")
    if outdir is not None:
        _emit_snapshots(state, outdir, "final")
        click.echo(f"outputs in {outdir}")


def _converge(name, meshes, k, t_end, component, csv_path):
    problem = make_problem(name)
    counts = [int(p) for p in meshes.split(",")]
    rows = convergence_table(problem, counts, MarchOptions(k=k),
                             t_end=t_end, component=component)
    click.echo(format_convergence_table(rows))
    if csv_path is not None:
        cols = ["cells", "l1", "l1_order", "l2", "l2_order",
                "linf", "linf_order"]
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for r in rows:
                writer.writerow(["" if r[c] is None else r[c] for c in cols])
        click.echo(f"table written to {csv_path}")


_CONVERGE_OPTIONS = [
    click.argument("name", type=click.Choice(CATALOG_NAMES)),
    click.option("--meshes", required=True,
                 help="Comma-separated cell counts, e.g. 100,200,400,800."),
    click.option("--k", type=click.IntRange(1, 3), default=2),
    click.option("--t-end", type=float, default=None),
    click.option("--component", type=int, default=0,
                 help="Conserved component for the error norms."),
    click.option("--csv", "csv_path", type=click.Path(), default=None),
]


def _with_converge_options(fn):
    for deco in reversed(_CONVERGE_OPTIONS):
        fn = deco(fn)
    return fn


@bench.command("converge")
@_with_converge_options
@_guarded
def bench_converge(name, meshes, k, t_end, component, csv_path):
    """Grid-refinement study on a problem with an exact solution."""
    _converge(name, meshes, k, t_end, component, csv_path)


@main.command("converge")
@_with_converge_options
@_guarded
def converge_cmd(name, meshes, k, t_end, component, csv_path):
    """Alias for `bench converge`."""
    _converge(name, meshes, k, t_end, component, csv_path)


@main.command("verify-pp")
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k", type=click.IntRange(1, 3), default=2)
@_guarded
def verify_pp(samples, seed, k):
    """Randomized forward-Euler mean-update admissibility trials."""
    report = theorem_trials(samples, seed=seed, k=k)
    click.echo(str(report))
    if report.violations:
        click.echo("FAIL: inadmissible updated averages found", err=True)
        sys.exit(EXIT_PP_FAULT)
    click.echo("OK: every updated average admissible")


@main.command("filter")
@click.argument("snapshot", type=click.Path())
@click.option("--dt", type=float, default=None,
              help="Damping horizon; defaults to the practical CFL step.")
@click.option("--boundary", type=click.Choice(["outflow", "periodic"]),
              default="outflow", show_default=True,
              help="Ghost fill used for the boundary-face jumps.")
@click.option("-o", "--output", type=click.Path(), default=None)
@_guarded
def filter_cmd(snapshot, dt, boundary, output):
    """Apply one pass of the modal damping filter to a modal snapshot."""
    field, t, gamma = read_modal(snapshot)
    recipe = (BoundaryRecipe.all_periodic(field.mesh.dimension)
              if boundary == "periodic"
              else BoundaryRecipe.all_outflow(field.mesh.dimension))
    fill_ghosts(field, recipe)
    if dt is None:
        dt = pp_cfl_dt(field, gamma, recipe)
    oe_apply(field, damping_rates(field, gamma), dt)
    if output is None:
        stem = Path(snapshot)
        output = stem.with_name(stem.stem + "_filtered" + stem.suffix)
    write_modal(field, t, gamma, output)
    click.echo(f"filtered snapshot written to {output} (dt = {dt:g})")


if __name__ == "__main__":
    main()
