"""Run configuration: a flat key = value document, strictly validated.

Unknown keys, duplicate keys, and out-of-range values are errors carrying
the line and column they came from. Toggles default to the full scheme;
switching one off is for ablation studies only.
"""

from dataclasses import dataclass
from typing import Tuple

from .march import MarchOptions
from .problems import CATALOG_NAMES

CFL_MODES = ("practical", "theorem", "corollary_zs", "corollary_opt")


class ConfigError(ValueError):
    """Invalid configuration text; knows where the problem is."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RunConfig:
    problem: str = "sine1d"
    cells: Tuple[int, ...] = ()       # empty: use the problem's default mesh
    k: int = 2
    cfl_mode: str = "practical"
    cfl: float = 0.12
    snapshot_times: Tuple[float, ...] = ()
    output_dir: str = "out"
    oe: bool = True
    pp: bool = True
    source: bool = True
    roe_surrogate: bool = True
    filter_initial: bool = True
    seed: int = 0

    def march_options(self):
        return MarchOptions(k=self.k, cfl=self.cfl, dt_mode=self.cfl_mode,
                            oe=self.oe, pp=self.pp, source=self.source,
                            filter_initial=self.filter_initial,
                            roe_surrogate=self.roe_surrogate)


def _parse_problem(value, line, col):
    if value not in CATALOG_NAMES:
        raise ConfigError(f"unknown problem {value!r}", line, col)
    return value


def _parse_k(value, line, col):
    k = _parse_int(value, line, col)
    if k not in (1, 2, 3):
        raise ConfigError(f"unsupported k = {k} (supported: 1, 2, 3)",
                          line, col)
    return k


def _parse_int(value, line, col):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", line, col)


def _parse_float(value, line, col):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", line, col)


def _parse_cfl(value, line, col):
    cfl = _parse_float(value, line, col)
    if not 0.0 < cfl <= 1.0:
        raise ConfigError(f"cfl must be in (0, 1], got {cfl}", line, col)
    return cfl


def _parse_cfl_mode(value, line, col):
    if value not in CFL_MODES:
        raise ConfigError(
            f"unknown cfl_mode {value!r} (choose one of {', '.join(CFL_MODES)})",
            line, col)
    return value


def _parse_cells(value, line, col):
    counts = tuple(_parse_int(p.strip(), line, col)
                   for p in value.split(","))
    if len(counts) not in (1, 2):
        raise ConfigError("cells takes one count (1D) or two (2D)", line, col)
    if any(n < 1 for n in counts):
        raise ConfigError("cell counts must be positive", line, col)
    return counts


def _parse_times(value, line, col):
    times = tuple(_parse_float(p.strip(), line, col)
                  for p in value.split(","))
    if any(t < 0.0 for t in times):
        raise ConfigError("snapshot times must be nonnegative", line, col)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("snapshot times must increase", line, col)
    return times


def _parse_dir(value, line, col):
    return value


_BOOL_WORDS = {"true": True, "on": True, "yes": True, "1": True,
               "false": False, "off": False, "no": False, "0": False}


def _parse_bool(value, line, col):
    try:
        return _BOOL_WORDS[value.lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {value!r}", line, col)


def _parse_seed(value, line, col):
    seed = _parse_int(value, line, col)
    if seed < 0:
        raise ConfigError("seed must be nonnegative", line, col)
    return seed


_PARSERS = {
    "problem": _parse_problem,
    "cells": _parse_cells,
    "k": _parse_k,
    "cfl_mode": _parse_cfl_mode,
    "cfl": _parse_cfl,
    "snapshot_times": _parse_times,
    "output_dir": _parse_dir,
    "oe": _parse_bool,
    "pp": _parse_bool,
    "source": _parse_bool,
    "roe_surrogate": _parse_bool,
    "filter_initial": _parse_bool,
    "seed": _parse_seed,
}


def parse_config(text):
    """Parse a key = value document into a RunConfig.

    Blank lines and '#' comments are ignored. Every key is optional; an
    empty document yields the defaults.
    """
    values = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = 1 + len(line) - len(line.lstrip())
            raise ConfigError("expected 'key = value'", ln, col)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = 1 + len(key_part) - len(key_part.lstrip())
        if not key:
            raise ConfigError("missing key before '='", ln, 1)
        value = value_part.strip()
        value_col = (len(key_part) + 2
                     + len(value_part) - len(value_part.lstrip()))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", ln, key_col)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", ln, key_col)
        if not value:
            raise ConfigError(f"missing value for {key!r}", ln, value_col)
        values[key] = _PARSERS[key](value, ln, value_col)
    return RunConfig(**values)


def load_config(path):
    """parse_config over a file's contents; errors name the file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}")
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc.args[0]}")
