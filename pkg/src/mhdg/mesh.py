"""Uniform Cartesian meshes (1D intervals, 2D rectangles) and quadrature.

Quadrature rules live on the reference interval [-1/2, 1/2], so weights sum
to 1 and a physical integral over a cell is dx * sum(w * f(x_c + dx*node)).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class QuadratureRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Mesh:
    dimension: int
    xmin: float
    xmax: float
    nx: int
    dx: float
    ymin: float = 0.0
    ymax: float = 0.0
    ny: int = 0
    dy: float = 0.0
    ghost: int = 1

    def x_centers(self, with_ghosts=False):
        g = self.ghost if with_ghosts else 0
        i = np.arange(-g, self.nx + g)
        return self.xmin + (i + 0.5) * self.dx

    def y_centers(self, with_ghosts=False):
        if self.dimension < 2:
            raise ValueError("1D mesh has no y axis")
        g = self.ghost if with_ghosts else 0
        j = np.arange(-g, self.ny + g)
        return self.ymin + (j + 0.5) * self.dy


def build_mesh(bounds, counts, ghost=1):
    """bounds: ((xmin,xmax),) or ((xmin,xmax),(ymin,ymax)); counts to match."""
    bounds = [tuple(map(float, b)) for b in bounds]
    counts = [int(n) for n in counts]
    if len(bounds) != len(counts) or len(bounds) not in (1, 2):
        raise ValueError("bounds/counts must both have length 1 or 2")
    if ghost < 1:
        raise ValueError("need at least one ghost layer")
    for (lo, hi), n in zip(bounds, counts):
        if not hi > lo:
            raise ValueError("degenerate bounds")
        if n < 1:
            raise ValueError("cell count must be >= 1")
    (xmin, xmax), nx = bounds[0], counts[0]
    if len(bounds) == 1:
        return Mesh(1, xmin, xmax, nx, (xmax - xmin) / nx, ghost=ghost)
    (ymin, ymax), ny = bounds[1], counts[1]
    return Mesh(2, xmin, xmax, nx, (xmax - xmin) / nx,
                ymin, ymax, ny, (ymax - ymin) / ny, ghost)


def _symmetrize(x, w):
    # enforce node[i] == -node[n-1-i] and weight[i] == weight[n-1-i] to the
    # last bit; mirror-symmetric runs depend on this, rounding does not give it
    return (x - x[::-1]) / 2.0, (w + w[::-1]) / 2.0


def gauss_rule(q):
    """q-point Gauss-Legendre rule on [-1/2, 1/2]; exact to degree 2q-1."""
    if q < 1:
        raise ValueError("need q >= 1")
    x, w = _symmetrize(*np.polynomial.legendre.leggauss(q))
    return QuadratureRule(0.5 * x, 0.5 * w)


def gauss_lobatto_rule(L):
    """L-point Gauss-Lobatto rule on [-1/2, 1/2]; exact to degree 2L-3.

    Interior nodes are the roots of P'_{L-1}; weights 2/(L(L-1)*P_{L-1}(x)^2)
    before scaling, so both endpoints carry weight 1/(L(L-1)) after.
    """
    if L < 2:
        raise ValueError("need L >= 2")
    PL1 = np.polynomial.legendre.Legendre.basis(L - 1)
    interior = PL1.deriv().roots() if L > 2 else np.empty(0)
    x = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    x, w = _symmetrize(x, 2.0 / (L * (L - 1) * PL1(x) ** 2))
    return QuadratureRule(0.5 * x, 0.5 * w)


def paired_sum(values, axis):
    """Sum over `axis`, adding entry i to entry n-1-i before reducing.

    IEEE addition is commutative, so reversing the sequence (up to an
    overall sign) then gives the bitwise-identical (or exactly negated)
    result. Quadrature contractions use this so mirror-symmetric data
    produces mirror-symmetric results to the last bit, which a plain
    left-to-right sum does not guarantee.
    """
    v = np.asarray(values)
    n = v.shape[axis]
    if n <= 4:
        # unrolled with the same palindromic grouping as the general path
        pre = (slice(None),) * (axis % v.ndim)

        def at(i):
            return v[pre + (i,)]

        if n == 1:
            return at(0).copy()
        if n == 2:
            return at(0) + at(1)
        if n == 3:
            return (at(0) + at(2)) + at(1)
        return (at(0) + at(3)) + (at(1) + at(2))
    v = np.moveaxis(v, axis, 0)
    h = n // 2
    out = (v[:h] + v[n - 1:n - h - 1:-1]).sum(axis=0)
    if n % 2:
        out = out + v[h]
    return out
