"""Modal bases and solution fields.

Scalar unknowns use tensor products of monic Legendre polynomials in the
cell-local coordinates (xi, eta) = (2(x-x_i)/dx, 2(y-y_j)/dy) in [-1,1]^2,
ordered by total degree. The in-plane magnetic field (B1, B2) lives in the
locally divergence-free subspace of [P^k]^2 spanned by an orthogonal,
degree-graded vector basis; its dimension is (k+1)(k+4)/2.

Inner products here are cell means (integral / cell area), so the constant
basis function has norm 1 and a physical integral is dx*dy times the mean.
"""

import numpy as np
from numpy.polynomial import polynomial as npoly

from .mesh import Mesh, gauss_rule, paired_sum
from .state import conserved_from_primitive

# conserved-vector component indices of the scalar block (rho, m, B3, E)
# and of the divergence-constrained block (B1, B2)
R_COMP = np.array([0, 1, 2, 3, 6, 7])
Q_COMP = np.array([4, 5])


def monic_legendre(kmax):
    """Coefficient arrays of monic Legendre polynomials p_0..p_kmax.

    p_{n+1} = t p_n - n^2/(4n^2-1) p_{n-1}; p_2 = t^2 - 1/3, p_3 = t^3 - 3t/5.
    """
    ps = [np.array([1.0]), np.array([0.0, 1.0])]
    for n in range(1, kmax):
        ps.append(npoly.polysub(npoly.polymulx(ps[n]),
                                n * n / (4.0 * n * n - 1.0) * ps[n - 1]))
    return ps[:kmax + 1]


def scalar_multi_indices(k):
    """Degree-graded multi-indices (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),..."""
    return [(m - a2, a2) for m in range(k + 1) for a2 in range(m + 1)]


def _ref_quadrature(q):
    # tensor rule on [-1,1]^2 with weights normalized to the cell mean
    r = gauss_rule(q)
    return 2.0 * r.nodes, r.weights


def _poly2_mean(c, q):
    xi, w = _ref_quadrature(q)
    X, Y = np.meshgrid(xi, xi, indexing="ij")
    return float(w @ npoly.polyval2d(X, Y, c) @ w)


class ScalarBasis:
    """Orthogonal Legendre product basis of P^k on a cell of size dx*dy."""

    def __init__(self, k, dx, dy):
        self.k = int(k)
        self.dx = float(dx)
        self.dy = float(dy)
        self.alphas = scalar_multi_indices(self.k)
        self.degrees = np.array([a1 + a2 for a1, a2 in self.alphas])
        self.dim = len(self.alphas)  # (k+1)(k+2)/2
        p = monic_legendre(self.k)
        self.coefs = [np.outer(p[a1], p[a2]) for a1, a2 in self.alphas]
        self.norms = np.array([_poly2_mean(_polymul2d(c, c), self.k + 2)
                               for c in self.coefs])

    def eval_members(self, xi, eta):
        """Values of all members, stacked on a new leading axis."""
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        return np.stack([npoly.polyval2d(xi, eta, c) for c in self.coefs])

    def eval_gradients(self, xi, eta):
        """Physical gradients (d/dx, d/dy) of all members: (dim, 2, ...)."""
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        out = np.empty((self.dim, 2) + xi.shape)
        for n, c in enumerate(self.coefs):
            out[n, 0] = (2.0 / self.dx) * npoly.polyval2d(xi, eta, npoly.polyder(c, axis=0))
            out[n, 1] = (2.0 / self.dy) * npoly.polyval2d(xi, eta, npoly.polyder(c, axis=1))
        return out


class LineBasis:
    """Monic Legendre basis of P^k on a 1D cell of width dx."""

    def __init__(self, k, dx):
        self.k = int(k)
        self.dx = float(dx)
        self.dim = self.k + 1
        self.degrees = np.arange(self.dim)
        self.coefs = monic_legendre(self.k)
        xi, w = _ref_quadrature(self.k + 2)
        self.norms = np.array([w @ npoly.polyval(xi, c) ** 2 for c in self.coefs])

    def eval_members(self, xi):
        xi = np.asarray(xi, float)
        return np.stack([npoly.polyval(xi, c) for c in self.coefs])

    def eval_derivs(self, xi):
        xi = np.asarray(xi, float)
        return np.stack([(2.0 / self.dx) * npoly.polyval(xi, npoly.polyder(c))
                         for c in self.coefs])


def _polymul2d(a, b):
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] != 0.0:
                out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def _axpy2d(a, coef, b):
    """a + coef*b for 2D coefficient matrices of different shapes."""
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
    out[:a.shape[0], :a.shape[1]] += a
    out[:b.shape[0], :b.shape[1]] += coef * b
    return out


def _c2d(entries, shape):
    c = np.zeros(shape)
    for (i, j), v in entries.items():
        c[i, j] = v
    return c


def _ldf_members_listed(k, dx, dy):
    """The verbatim orthogonal LDF members through degree 2, as coefficient
    matrix pairs (c1, c2) with c[i,j] multiplying xi^i eta^j."""
    z = {(0, 0): 0.0}
    members = [
        (_c2d(z, (1, 1)), _c2d({(0, 0): 1.0}, (1, 1))),                      # (0, 1)
        (_c2d({(0, 0): 1.0}, (1, 1)), _c2d(z, (1, 1))),                      # (1, 0)
        (_c2d(z, (2, 1)), _c2d({(1, 0): 1.0}, (2, 1))),                      # (0, xi)
        (_c2d({(0, 1): 1.0}, (1, 2)), _c2d(z, (1, 2))),                      # (eta, 0)
        (_c2d({(1, 0): dx}, (2, 2)), _c2d({(0, 1): -dy}, (2, 2))),           # (dx xi, -dy eta)
        (_c2d({(0, 0): -1 / 3, (0, 2): 1.0}, (1, 3)), _c2d(z, (1, 3))),      # (eta^2-1/3, 0)
        (_c2d(z, (3, 1)), _c2d({(0, 0): -1 / 3, (2, 0): 1.0}, (3, 1))),      # (0, xi^2-1/3)
        (_c2d({(0, 0): -dx / 3, (2, 0): dx}, (3, 2)),
         _c2d({(1, 1): -2 * dy}, (3, 2))),                                   # (dx(xi^2-1/3), -2dy xi eta)
        (_c2d({(1, 1): -2 * dx}, (2, 3)),
         _c2d({(0, 0): -dy / 3, (0, 2): dy}, (2, 3))),                       # (-2dx xi eta, dy(eta^2-1/3))
    ]
    counts = {0: 2, 1: 5, 2: 9}
    return members[:counts[k]]


def _vec_inner(a, b, q):
    return _poly2_mean(_polymul2d(a[0], b[0]), q) + _poly2_mean(_polymul2d(a[1], b[1]), q)


def _vec_mirror(member, axis):
    """Coefficient matrices of the mirrored vector field: the x-mirror maps
    (q1, q2)(xi, eta) to (-q1(-xi, eta), q2(-xi, eta)), the y-mirror to
    (q1(xi, -eta), -q2(xi, -eta)). Sign flips are exact."""
    c1, c2 = member
    if axis == 0:
        s1 = (-1.0) ** np.arange(c1.shape[0])[:, None]
        s2 = (-1.0) ** np.arange(c2.shape[0])[:, None]
        return -c1 * s1, c2 * s2
    s1 = (-1.0) ** np.arange(c1.shape[1])[None, :]
    s2 = (-1.0) ** np.arange(c2.shape[1])[None, :]
    return c1 * s1, -c2 * s2


def _mirror_sign(member, axis):
    """+1/-1 when the member maps to that multiple of itself under the
    axis mirror; None for a parity-mixed member."""
    m1, m2 = _vec_mirror(member, axis)
    c1, c2 = member
    for s in (1.0, -1.0):
        if np.array_equal(m1, s * c1) and np.array_equal(m2, s * c2):
            return s
    return None


class VectorBasis:
    """Orthogonal degree-graded basis of the locally divergence-free
    subspace of [P^k]^2 on a cell of size dx*dy.

    Members through degree 2 are the listed closed forms. The degree-3
    group is generated as scaled curls (dx d/d_eta psi, -dy d/d_xi psi) of
    the degree-4 scalar Legendre members psi (any 2D divergence-free
    polynomial field is such a curl), then orthogonalized by Gram-Schmidt
    in listed order, which preserves both the grading and the identically
    zero divergence.

    members may be injected explicitly for testing.
    """

    def __init__(self, k, dx, dy, members=None):
        if not 1 <= k <= 3:
            raise ValueError("vector basis supports k in {1, 2, 3}")
        self.k = int(k)
        self.dx = float(dx)
        self.dy = float(dy)
        self.group_ends = np.array([(m + 1) * (m + 4) // 2 for m in range(k + 1)])
        self.dim = int(self.group_ends[-1])  # (k+1)(k+4)/2
        if members is None:
            members = _ldf_members_listed(min(k, 2), dx, dy)
            if k == 3:
                # the listed members are already mutually orthogonal for any
                # dx, dy; only the generated degree-3 group needs projecting.
                # Cross-parity inner products vanish identically, so those
                # projections are skipped outright: quadrature would leave
                # O(eps) residues that break the exact mirror parity the
                # reflecting boundary fill relies on.
                p = monic_legendre(4)
                for a1, a2 in [(4 - i, i) for i in range(5)]:
                    psi = np.outer(p[a1], p[a2])
                    c1 = np.atleast_2d(dx * npoly.polyder(psi, axis=1))
                    c2 = np.atleast_2d(-dy * npoly.polyder(psi, axis=0))
                    sig = (_mirror_sign((c1, c2), 0), _mirror_sign((c1, c2), 1))
                    for u in members:
                        if (_mirror_sign(u, 0), _mirror_sign(u, 1)) != sig:
                            continue
                        coef = _vec_inner((c1, c2), u, k + 2) / _vec_inner(u, u, k + 2)
                        c1 = _axpy2d(c1, -coef, u[0])
                        c2 = _axpy2d(c2, -coef, u[1])
                    members.append((c1, c2))
        self.members = members
        self.degrees = np.searchsorted(self.group_ends, np.arange(self.dim), side="right")
        q = self.k + 2
        self.norms = np.array([_vec_inner(m, m, q) for m in self.members])
        # physical divergence of each member as a coefficient matrix;
        # identically ~0 unless a test injects a non-LDF member
        self.div_coefs = [self._div(c1, c2) for c1, c2 in self.members]

    def _div(self, c1, c2):
        d1 = (2.0 / self.dx) * npoly.polyder(c1, axis=0)
        d2 = (2.0 / self.dy) * npoly.polyder(c2, axis=1)
        out = np.zeros((max(d1.shape[0], d2.shape[0]), max(d1.shape[1], d2.shape[1])))
        out[:d1.shape[0], :d1.shape[1]] += d1
        out[:d2.shape[0], :d2.shape[1]] += d2
        return out

    def eval_members(self, xi, eta):
        """Values of all members: (dim, 2, ...)."""
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        out = np.empty((self.dim, 2) + xi.shape)
        for n, (c1, c2) in enumerate(self.members):
            out[n, 0] = npoly.polyval2d(xi, eta, c1)
            out[n, 1] = npoly.polyval2d(xi, eta, c2)
        return out

    def eval_gradients(self, xi, eta):
        """Physical derivatives of all members: (dim, component, d/dx|d/dy, ...)."""
        xi, eta = np.broadcast_arrays(np.asarray(xi, float), np.asarray(eta, float))
        out = np.empty((self.dim, 2, 2) + xi.shape)
        for n, member in enumerate(self.members):
            for v, c in enumerate(member):
                out[n, v, 0] = (2.0 / self.dx) * npoly.polyval2d(
                    xi, eta, np.atleast_2d(npoly.polyder(c, axis=0)))
                out[n, v, 1] = (2.0 / self.dy) * npoly.polyval2d(
                    xi, eta, np.atleast_2d(npoly.polyder(c, axis=1)))
        return out

    def mirror_signs(self, axis):
        """Per-member +/-1 factors picked up under the axis mirror; the
        reflecting ghost fill multiplies coefficients by these."""
        signs = [_mirror_sign(m, axis) for m in self.members]
        if any(s is None for s in signs):
            raise ValueError("basis member is not parity-pure")
        return np.array(signs)


def scalar_basis_eval(basis, alpha, xi, eta):
    """Value and physical gradient of the member with multi-index alpha."""
    idx = basis.alphas.index(tuple(alpha))
    c = basis.coefs[idx]
    val = npoly.polyval2d(np.asarray(xi, float), np.asarray(eta, float), c)
    gx = (2.0 / basis.dx) * npoly.polyval2d(xi, eta, npoly.polyder(c, axis=0))
    gy = (2.0 / basis.dy) * npoly.polyval2d(xi, eta, npoly.polyder(c, axis=1))
    return val, (gx, gy)


def ldf_basis_eval(basis, index, xi, eta):
    """2-vector value of LDF member `index` at (xi, eta)."""
    if not 0 <= index < basis.dim:
        raise IndexError("LDF basis index out of range")
    c1, c2 = basis.members[index]
    return np.stack([npoly.polyval2d(np.asarray(xi, float), np.asarray(eta, float), c1),
                     npoly.polyval2d(np.asarray(xi, float), np.asarray(eta, float), c2)])


class SolutionField:
    """Per-cell modal coefficients, ghost cells included.

    2D: R has shape (nx+2g, ny+2g, 6, D_R) over (rho, m1, m2, m3, B3, E)
    and Q has shape (nx+2g, ny+2g, D_Q) over the LDF members.
    1D: R has shape (nx+2g, 8, k+1) over full conserved vectors, with B1
    restricted to mode 0 (in 1D the divergence constraint makes B1 locally
    constant); Q is None.
    """

    def __init__(self, mesh, k, basis, vbasis, R, Q):
        self.mesh = mesh
        self.k = k
        self.basis = basis
        self.vbasis = vbasis
        self.R = R
        self.Q = Q

    @classmethod
    def zeros(cls, mesh, k):
        g = mesh.ghost
        if mesh.dimension == 1:
            basis = LineBasis(k, mesh.dx)
            R = np.zeros((mesh.nx + 2 * g, 8, basis.dim))
            return cls(mesh, k, basis, None, R, None)
        basis = ScalarBasis(k, mesh.dx, mesh.dy)
        vbasis = VectorBasis(k, mesh.dx, mesh.dy)
        R = np.zeros((mesh.nx + 2 * g, mesh.ny + 2 * g, 6, basis.dim))
        Q = np.zeros((mesh.nx + 2 * g, mesh.ny + 2 * g, vbasis.dim))
        return cls(mesh, k, basis, vbasis, R, Q)

    def copy(self):
        return SolutionField(self.mesh, self.k, self.basis, self.vbasis,
                             self.R.copy(), None if self.Q is None else self.Q.copy())

    @property
    def interior(self):
        g = self.mesh.ghost
        if self.mesh.dimension == 1:
            return (slice(g, g + self.mesh.nx),)
        return (slice(g, g + self.mesh.nx), slice(g, g + self.mesh.ny))

    def cell_averages(self):
        """Interior cell averages as conserved vectors (..., 8).

        All basis members of degree >= 1 have zero cell mean, so only the
        constant modes contribute: for the LDF block the mean of B1 is the
        (1,0)-member coefficient Q[1], and of B2 the (0,1)-member Q[0].
        """
        g = self.mesh.ghost
        if self.mesh.dimension == 1:
            return self.R[g:g + self.mesh.nx, :, 0].copy()
        sl = self.interior
        out = np.empty((self.mesh.nx, self.mesh.ny, 8))
        out[..., R_COMP] = self.R[sl][..., 0]
        out[..., 4] = self.Q[sl][..., 1]
        out[..., 5] = self.Q[sl][..., 0]
        return out


def truncate_modes(coeffs, m, degrees):
    """Zero all modes of polynomial degree > max(m, 0); exact L^2 projection
    by orthogonality. m = -1 is treated as m = 0."""
    out = np.array(coeffs, dtype=float, copy=True)
    out[..., np.asarray(degrees) > max(m, 0)] = 0.0
    return out


def project_initial(ic, mesh, k, gamma):
    """L^2-project primitive initial data ic onto a SolutionField.

    ic maps coordinate arrays (x[, y]) to primitive states (..., 8). Uses a
    (k+2)-point tensor Gauss rule per cell, one order above the scheme's.
    Ghost cells are left zero for the boundary recipe to fill.
    """
    fld = SolutionField.zeros(mesh, k)
    g = mesh.ghost
    r = gauss_rule(k + 2)
    if mesh.dimension == 1:
        xq = mesh.x_centers()[:, None] + mesh.dx * r.nodes[None, :]
        U = conserved_from_primitive(ic(xq), gamma)
        if not np.all(np.isfinite(U)):
            raise ValueError("initial data returned nonfinite values")
        vals = fld.basis.eval_members(2.0 * r.nodes)  # (dim, q)
        coef = np.einsum("q,aq,xqc->xca", r.weights, vals, U) / fld.basis.norms
        fld.R[g:g + mesh.nx] = coef
        fld.R[:, 4, 1:] = 0.0  # B1 holds its cell average only
        return fld
    xq = mesh.x_centers()[:, None] + mesh.dx * r.nodes[None, :]
    yq = mesh.y_centers()[:, None] + mesh.dy * r.nodes[None, :]
    W = ic(xq[:, None, :, None], yq[None, :, None, :])
    U = conserved_from_primitive(W, gamma)  # (nx, ny, q, q, 8)
    if not np.all(np.isfinite(U)):
        raise ValueError("initial data returned nonfinite values")
    xi = 2.0 * r.nodes
    sval = fld.basis.eval_members(xi[:, None], xi[None, :])    # (DR, q, q)
    vval = fld.vbasis.eval_members(xi[:, None], xi[None, :])   # (DQ, 2, q, q)
    w2 = r.weights[:, None] * r.weights[None, :]
    sl = fld.interior
    # paired_sum reductions so mirror-symmetric initial data projects to
    # mirror-symmetric coefficients bitwise
    UR = U[..., R_COMP]
    for a in range(fld.basis.dim):
        integ = (w2 * sval[a])[None, None, :, :, None] * UR
        fld.R[sl][..., a] = (paired_sum(paired_sum(integ, 2), 2)
                             / fld.basis.norms[a])
    for a in range(fld.vbasis.dim):
        integ = w2 * (vval[a, 0] * U[..., 4] + vval[a, 1] * U[..., 5])
        fld.Q[sl][..., a] = (paired_sum(paired_sum(integ, 2), 2)
                             / fld.vbasis.norms[a])
    return fld


def evaluate_solution(field, cell, point):
    """Conserved 8-vector of the modal solution at a physical point of an
    interior cell (indices without the ghost offset)."""
    mesh = field.mesh
    g = mesh.ghost
    if mesh.dimension == 1:
        i = cell if np.isscalar(cell) else cell[0]
        xi = 2.0 * (np.asarray(point, float) - mesh.x_centers()[i]) / mesh.dx
        vals = field.basis.eval_members(xi)  # (dim, ...)
        return np.moveaxis(np.tensordot(field.R[g + i], vals, axes=(1, 0)), 0, -1)
    i, j = cell
    x, y = point
    xi = 2.0 * (np.asarray(x, float) - mesh.x_centers()[i]) / mesh.dx
    eta = 2.0 * (np.asarray(y, float) - mesh.y_centers()[j]) / mesh.dy
    sval = field.basis.eval_members(xi, eta)           # (DR, ...)
    vval = field.vbasis.eval_members(xi, eta)          # (DQ, 2, ...)
    U = np.empty(np.shape(xi) + (8,))
    U[..., R_COMP] = np.moveaxis(
        np.tensordot(field.R[g + i, g + j], sval, axes=(1, 0)), 0, -1)
    q = np.tensordot(field.Q[g + i, g + j], vval, axes=(0, 0))
    U[..., 4] = q[0]
    U[..., 5] = q[1]
    return U


def local_divergence(field, cell, point):
    """Analytic div(B1, B2) of the reconstructed field at a physical point;
    identically ~0 for any field built on the LDF basis."""
    if field.mesh.dimension == 1:
        raise ValueError("local divergence is defined for 2D fields")
    mesh = field.mesh
    g = mesh.ghost
    i, j = cell
    x, y = point
    xi = 2.0 * (x - mesh.x_centers()[i]) / mesh.dx
    eta = 2.0 * (y - mesh.y_centers()[j]) / mesh.dy
    vals = np.stack([npoly.polyval2d(np.asarray(xi, float), np.asarray(eta, float), c)
                     for c in field.vbasis.div_coefs])
    return np.tensordot(field.Q[g + i, g + j], vals, axes=(0, 0))
