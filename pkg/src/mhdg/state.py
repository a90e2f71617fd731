"""Physical state vectors for ideal compressible MHD.

Conserved layout (last axis, length 8): (rho, m1, m2, m3, B1, B2, B3, E).
Primitive layout (last axis, length 8): (rho, u1, u2, u3, B1, B2, B3, p).
All functions broadcast over leading axes, so a single point, a row of
interface states, or a full mesh of cell averages go through the same code.
"""

import numpy as np

RHO, MX, MY, MZ, BX, BY, BZ, EN = range(8)


class PositivityError(RuntimeError):
    """An operation met a state outside the admissible set (rho > 0,
    internal energy > 0). Carries an optional location payload."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


def conserved_from_primitive(prim, gamma):
    """Map (rho, u, B, p) to (rho, m, B, E).

    E = p/(gamma-1) + rho*|u|^2/2 + |B|^2/2, m = rho*u.
    """
    prim = np.asarray(prim, dtype=float)
    rho = prim[..., RHO]
    if np.any(rho <= 0.0):
        raise ValueError("nonpositive density in primitive state")
    u = prim[..., 1:4]
    B = prim[..., 4:7]
    p = prim[..., 7]
    cons = prim.copy()
    cons[..., 1:4] = rho[..., None] * u
    cons[..., EN] = (p / (gamma - 1.0)
                     + 0.5 * rho * np.sum(u * u, axis=-1)
                     + 0.5 * np.sum(B * B, axis=-1))
    return cons


def primitive_from_conserved(cons, gamma):
    """Invert the EOS map. Returns (prim, nonphysical).

    nonphysical flags p <= 0 elementwise instead of raising; the limiter
    needs to see raw sub-zero pressures. Nonpositive density still raises,
    velocities would be meaningless.
    """
    cons = np.asarray(cons, dtype=float)
    rho = cons[..., RHO]
    if np.any(rho <= 0.0):
        raise ValueError("nonpositive density in conserved state")
    u = cons[..., 1:4] / rho[..., None]
    p = (gamma - 1.0) * internal_energy(cons)
    prim = cons.copy()
    prim[..., 1:4] = u
    prim[..., 7] = p
    return prim, p <= 0.0


def internal_energy(cons):
    """E - (|m|^2/rho + |B|^2)/2. May be negative; callers decide."""
    cons = np.asarray(cons, dtype=float)
    rho = cons[..., RHO]
    if np.any(rho == 0.0):
        raise ValueError("zero density")
    return cons[..., EN] - 0.5 * (np.sum(cons[..., 1:4] ** 2, axis=-1) / rho
                                  + np.sum(cons[..., 4:7] ** 2, axis=-1))


def is_admissible(cons):
    """Strict admissibility: rho > 0 and internal energy > 0."""
    cons = np.asarray(cons, dtype=float)
    rho = cons[..., RHO]
    pos = rho > 0.0
    safe = np.where(pos, rho, 1.0)
    e = cons[..., EN] - 0.5 * (np.sum(cons[..., 1:4] ** 2, axis=-1) / safe
                               + np.sum(cons[..., 4:7] ** 2, axis=-1))
    return pos & (e > 0.0)


def _internal_energy_cm(U):
    """internal_energy for component-first arrays (8, ...)."""
    rho = U[0]
    if np.any(rho == 0.0):
        raise ValueError("zero density")
    return U[7] - 0.5 * ((U[1] ** 2 + U[2] ** 2 + U[3] ** 2) / rho
                         + (U[4] ** 2 + U[5] ** 2 + U[6] ** 2))


def _is_admissible_cm(U):
    """is_admissible for component-first arrays (8, ...)."""
    rho = U[0]
    pos = rho > 0.0
    safe = np.where(pos, rho, 1.0)
    e = U[7] - 0.5 * ((U[1] ** 2 + U[2] ** 2 + U[3] ** 2) / safe
                      + (U[4] ** 2 + U[5] ** 2 + U[6] ** 2))
    return pos & (e > 0.0)


def _gp_source_cm(U):
    """godunov_powell_source for component-first arrays (8, ...)."""
    rho = U[0]
    if np.any(rho <= 0.0):
        raise ValueError("nonpositive density")
    S = np.zeros_like(U)
    S[1:4] = U[4:7]
    u1 = U[1] / rho
    u2 = U[2] / rho
    u3 = U[3] / rho
    S[4] = u1
    S[5] = u2
    S[6] = u3
    S[7] = u1 * U[4] + u2 * U[5] + u3 * U[6]
    return S


def gql_value(cons, v_star, B_star):
    """U . n* + |B*|^2/2 for n* = (|v*|^2/2, -v*, -B*, 1).

    Positive for all (v_star, B_star) iff U is admissible (given rho > 0);
    the minimum over directions is the internal energy, attained at
    v* = m/rho, B* = B.
    """
    cons = np.asarray(cons, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    B_star = np.asarray(B_star, dtype=float)
    return (0.5 * cons[..., RHO] * np.sum(v_star * v_star, axis=-1)
            - np.sum(cons[..., 1:4] * v_star, axis=-1)
            - np.sum(cons[..., 4:7] * B_star, axis=-1)
            + cons[..., EN]
            + 0.5 * np.sum(B_star * B_star, axis=-1))


def godunov_powell_source(cons):
    """S(U) = (0, B, u, u.B); multiplies -div(B) in the symmetrized system."""
    cons = np.asarray(cons, dtype=float)
    rho = cons[..., RHO]
    if np.any(rho <= 0.0):
        raise ValueError("nonpositive density")
    u = cons[..., 1:4] / rho[..., None]
    B = cons[..., 4:7]
    S = np.zeros_like(cons)
    S[..., 1:4] = B
    S[..., 4:7] = u
    S[..., EN] = np.sum(u * B, axis=-1)
    return S
