"""Snapshot output: modal binary, cell-center CSV, structured-grid text.

The modal binary holds the raw coefficient arrays (ghost cells included)
behind a JSON header, so a write/read cycle is a bitwise identity. The two
text formats sample the polynomial solution at cell centers and carry the
primitive variables plus the derived Mach number and magnetic pressure;
every number is printed with 17 significant digits, so identical fields
always produce identical bytes.
"""

import json

import numpy as np

from .basis import SolutionField
from .mesh import build_mesh
from .positivity import _node_states

_MAGIC = b"MHDGMOD1"

# primitive columns followed by the derived plot quantities
VARIABLES = ("rho", "u1", "u2", "u3", "B1", "B2", "B3", "p", "mach", "pmag")


def _fmt(v):
    return f"{v:.16e}"


def write_modal(field, t, gamma, path):
    """Dump the coefficient arrays behind a self-describing header."""
    mesh = field.mesh
    bounds = [[mesh.xmin, mesh.xmax]]
    counts = [mesh.nx]
    if mesh.dimension == 2:
        bounds.append([mesh.ymin, mesh.ymax])
        counts.append(mesh.ny)
    header = {
        "format": _MAGIC.decode(),
        "dimension": mesh.dimension,
        "k": field.k,
        "time": float(t),
        "gamma": float(gamma),
        "bounds": bounds,
        "counts": counts,
        "ghost": mesh.ghost,
        "r_shape": list(field.R.shape),
        "q_shape": None if field.Q is None else list(field.Q.shape),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.uint64(len(blob)).tobytes())
        fh.write(blob)
        fh.write(np.ascontiguousarray(field.R, dtype="<f8").tobytes())
        if field.Q is not None:
            fh.write(np.ascontiguousarray(field.Q, dtype="<f8").tobytes())
    return path


def read_modal(path):
    """Inverse of write_modal: returns (field, time, gamma)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a modal snapshot file")
        (hlen,) = np.frombuffer(fh.read(8), dtype=np.uint64)
        header = json.loads(fh.read(int(hlen)).decode())
        mesh = build_mesh(header["bounds"], header["counts"],
                          ghost=header["ghost"])
        field = SolutionField.zeros(mesh, header["k"])
        r_shape = tuple(header["r_shape"])
        if field.R.shape != r_shape:
            raise ValueError(f"{path}: coefficient layout mismatch")
        n = int(np.prod(r_shape))
        field.R[...] = np.frombuffer(fh.read(8 * n),
                                     dtype="<f8").reshape(r_shape)
        if header["q_shape"] is not None:
            q_shape = tuple(header["q_shape"])
            n = int(np.prod(q_shape))
            field.Q[...] = np.frombuffer(fh.read(8 * n),
                                         dtype="<f8").reshape(q_shape)
    return field, header["time"], header["gamma"]


def center_values(field, gamma):
    """Primitive + derived variables at every interior cell center.

    Returns an array (..., 10) over VARIABLES order. Sampled point values
    are reported as written, even where they fall outside the admissible
    set (centers are not limiter-protected nodes in general); the Mach
    number reads 0 wherever the sound speed is undefined.
    """
    mesh = field.mesh
    center = np.zeros((1, mesh.dimension))
    U = _node_states(field, center)[..., 0, :]
    rho = U[..., 0]
    inv = np.divide(1.0, rho, out=np.zeros_like(rho), where=rho > 0.0)
    u = U[..., 1:4] * inv[..., None]
    kinetic = 0.5 * np.sum(U[..., 1:4] ** 2, axis=-1) * inv
    pmag = 0.5 * np.sum(U[..., 4:7] ** 2, axis=-1)
    p = (gamma - 1.0) * (U[..., 7] - kinetic - pmag)
    speed = np.sqrt(np.sum(u ** 2, axis=-1))
    sound = np.sqrt(np.maximum(gamma * p * inv, 0.0))
    mach = np.divide(speed, sound, out=np.zeros_like(speed),
                     where=sound > 0.0)
    out = np.empty(U.shape[:-1] + (len(VARIABLES),))
    out[..., 0] = rho
    out[..., 1:4] = u
    out[..., 4:7] = U[..., 4:7]
    out[..., 7] = p
    out[..., 8] = mach
    out[..., 9] = pmag
    return out


def _meta_lines(field, t, gamma):
    mesh = field.mesh
    shape = f"{mesh.nx}" if mesh.dimension == 1 else f"{mesh.nx} {mesh.ny}"
    return [f"# time = {_fmt(t)}",
            f"# gamma = {_fmt(gamma)}",
            f"# cells = {shape}"]


def write_csv(field, t, gamma, path):
    """Cell-center sample of VARIABLES, one row per cell."""
    mesh = field.mesh
    vals = center_values(field, gamma)
    lines = _meta_lines(field, t, gamma)
    if mesh.dimension == 1:
        lines.append("x," + ",".join(VARIABLES))
        for i, x in enumerate(mesh.x_centers()):
            lines.append(",".join([_fmt(x)] + [_fmt(v) for v in vals[i]]))
    else:
        lines.append("x,y," + ",".join(VARIABLES))
        ys = mesh.y_centers()
        for i, x in enumerate(mesh.x_centers()):
            for j, y in enumerate(ys):
                lines.append(",".join([_fmt(x), _fmt(y)]
                                      + [_fmt(v) for v in vals[i, j]]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_grid(field, t, gamma, path):
    """Legacy-VTK structured points file of VARIABLES (2D only)."""
    mesh = field.mesh
    if mesh.dimension != 2:
        raise ValueError("structured-grid output needs a 2D field")
    vals = center_values(field, gamma)
    x0 = mesh.xmin + 0.5 * mesh.dx
    y0 = mesh.ymin + 0.5 * mesh.dy
    lines = ["# vtk DataFile Version 3.0",
             f"time = {_fmt(t)} gamma = {_fmt(gamma)}",
             "ASCII",
             "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {mesh.nx} {mesh.ny} 1",
             f"ORIGIN {_fmt(x0)} {_fmt(y0)} {_fmt(0.0)}",
             f"SPACING {_fmt(mesh.dx)} {_fmt(mesh.dy)} {_fmt(1.0)}",
             f"POINT_DATA {mesh.nx * mesh.ny}"]
    for m, name in enumerate(VARIABLES):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK wants the x index fastest
        block = vals[..., m].T
        lines.extend(" ".join(_fmt(v) for v in row) for row in block)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


_WRITERS = {"modal": write_modal, "csv": write_csv, "grid": write_grid}

FORMATS = tuple(_WRITERS)


def write_snapshot(field, t, gamma, fmt, path):
    """Write one snapshot file; fmt is one of FORMATS."""
    try:
        writer = _WRITERS[fmt]
    except KeyError:
        raise ValueError(
            f"unknown snapshot format {fmt!r} (choose one of {FORMATS})")
    return writer(field, t, gamma, path)
