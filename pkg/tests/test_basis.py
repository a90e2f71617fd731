import numpy as np
import pytest

from mhdg.basis import (ScalarBasis, LineBasis, VectorBasis, SolutionField,
                        monic_legendre, scalar_multi_indices, scalar_basis_eval,
                        ldf_basis_eval, truncate_modes, project_initial,
                        evaluate_solution, local_divergence, R_COMP, Q_COMP)
from mhdg.mesh import build_mesh, gauss_rule
from mhdg.state import conserved_from_primitive, primitive_from_conserved


def test_monic_legendre_closed_forms():
    p = monic_legendre(3)
    assert np.allclose(p[0], [1])
    assert np.allclose(p[1], [0, 1])
    assert np.allclose(p[2], [-1 / 3, 0, 1])
    assert np.allclose(p[3], [0, -3 / 5, 0, 1])


def test_multi_index_order_and_dims():
    assert scalar_multi_indices(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    for k in (1, 2, 3):
        assert len(scalar_multi_indices(k)) == (k + 1) * (k + 2) // 2


def test_scalar_member_values_and_gradients():
    b = ScalarBasis(2, dx=0.5, dy=0.25)
    val, grad = scalar_basis_eval(b, (0, 0), 0.7, -0.2)
    assert val == 1.0 and grad[0] == 0.0 and grad[1] == 0.0
    val, _ = scalar_basis_eval(b, (2, 0), 0.0, 0.9)
    assert val == pytest.approx(-1 / 3)
    val, grad = scalar_basis_eval(b, (1, 0), 0.3, 0.4)
    assert val == pytest.approx(0.3)
    assert grad[0] == pytest.approx(2 / 0.5)
    assert grad[1] == 0.0
    val, _ = scalar_basis_eval(b, (1, 1), 0.3, -0.7)
    assert val == pytest.approx(-0.21)
    with pytest.raises(ValueError):
        scalar_basis_eval(b, (3, 0), 0.0, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("dx,dy", [(0.5, 0.5), (0.3, 0.07)])
def test_scalar_gram_matrix_diagonal(k, dx, dy):
    b = ScalarBasis(k, dx, dy)
    r = gauss_rule(k + 2)
    xi = 2 * r.nodes
    vals = b.eval_members(xi[:, None], xi[None, :])
    w2 = r.weights[:, None] * r.weights[None, :]
    G = np.einsum("amn,bmn,mn->ab", vals, vals, w2)
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) < 1e-12 * np.max(np.diag(G))
    assert np.allclose(np.diag(G), b.norms, rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("dx,dy", [(0.5, 0.5), (0.3, 0.07)])
def test_vector_gram_matrix_diagonal(k, dx, dy):
    vb = VectorBasis(k, dx, dy)
    assert vb.dim == (k + 1) * (k + 4) // 2
    r = gauss_rule(k + 2)
    xi = 2 * r.nodes
    vals = vb.eval_members(xi[:, None], xi[None, :])
    w2 = r.weights[:, None] * r.weights[None, :]
    G = np.einsum("avmn,bvmn,mn->ab", vals, vals, w2)
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) < 1e-12 * np.max(np.diag(G))
    assert np.allclose(np.diag(G), vb.norms, rtol=1e-12)


def test_ldf_member_values():
    vb = VectorBasis(2, dx=0.2, dy=0.1)
    assert np.allclose(ldf_basis_eval(vb, 0, 0.37, -0.4), [0, 1])
    assert np.allclose(ldf_basis_eval(vb, 4, 1.0, 1.0), [0.2, -0.1])
    # (dx(xi^2-1/3), -2 dy xi eta) at (1, 1)
    assert np.allclose(ldf_basis_eval(vb, 7, 1.0, 1.0), [0.2 * 2 / 3, -0.2])
    with pytest.raises(IndexError):
        ldf_basis_eval(vb, 9, 0.0, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_ldf_members_divergence_free(k):
    vb = VectorBasis(k, dx=0.3, dy=0.07)
    for div in vb.div_coefs:
        assert np.max(np.abs(div)) < 1e-12


def test_ldf_degree_grading():
    vb = VectorBasis(3, 0.1, 0.1)
    assert list(vb.group_ends) == [2, 5, 9, 14]
    assert list(vb.degrees) == [0, 0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3]


def test_truncate_modes():
    b = ScalarBasis(2, 1.0, 1.0)
    c = np.arange(1.0, 7.0)
    assert np.allclose(truncate_modes(c, 2, b.degrees), c)
    assert np.allclose(truncate_modes(c, 0, b.degrees), [1, 0, 0, 0, 0, 0])
    assert np.allclose(truncate_modes(c, -1, b.degrees), truncate_modes(c, 0, b.degrees))
    t1 = truncate_modes(c, 1, b.degrees)
    assert np.allclose(t1, [1, 2, 3, 0, 0, 0])
    assert np.allclose(truncate_modes(t1, 1, b.degrees), t1)


def test_project_constant_2d():
    mesh = build_mesh([(0, 1), (0, 2)], [3, 4])
    W0 = np.array([1.2, 0.3, -0.1, 0.05, 0.4, -0.2, 0.15, 2.0])

    def ic(x, y):
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(W0, shape + (8,)).copy()

    fld = project_initial(ic, mesh, 2, 1.4)
    U0 = conserved_from_primitive(W0, 1.4)
    avg = fld.cell_averages()
    assert np.allclose(avg, np.broadcast_to(U0, avg.shape), rtol=1e-13)
    assert np.max(np.abs(fld.R[fld.interior][..., 1:])) < 1e-13
    assert np.max(np.abs(fld.Q[fld.interior][..., 2:])) < 1e-13


def test_project_sine_cell_averages_1d():
    mesh = build_mesh([(0, 2 * np.pi)], [100])

    def ic(x):
        W = np.zeros(np.shape(x) + (8,))
        W[..., 0] = 1 + 0.99 * np.sin(x)
        W[..., 4] = 0.1
        W[..., 7] = 1.0
        return W

    fld = project_initial(ic, mesh, 2, 1.4)
    edges = mesh.xmin + mesh.dx * np.arange(101)
    exact = 1 + 0.99 * (np.cos(edges[:-1]) - np.cos(edges[1:])) / mesh.dx
    assert np.allclose(fld.cell_averages()[:, 0], exact, rtol=1e-12, atol=1e-13)
    assert np.max(np.abs(fld.R[fld.interior][:, 4, 1:])) == 0.0


def test_projection_reproduces_polynomials_2d():
    # conserved components chosen as total-degree <= 2 polynomials with
    # (B1,B2) divergence-free, so projection must reproduce them pointwise
    mesh = build_mesh([(0, 1), (0, 1)], [3, 3])
    gamma = 1.4

    def U_poly(x, y):
        U = np.zeros(np.broadcast(x, y).shape + (8,))
        U[..., 0] = 2.0 + 0.1 * x + 0.2 * y + 0.05 * x * y
        U[..., 1] = 0.1 * x - 0.02 * y * y
        U[..., 2] = 0.03 + 0.01 * x * x
        U[..., 3] = 0.0
        U[..., 4] = 0.3 + 0.04 * y + 0.02 * y * y
        U[..., 5] = 0.2 - 0.03 * x * x
        U[..., 6] = 0.05 * x
        U[..., 7] = 9.0 + 0.2 * x + 0.1 * y * y
        return U

    def ic(x, y):
        return primitive_from_conserved(U_poly(x, y), gamma)[0]

    fld = project_initial(ic, mesh, 2, gamma)
    rng = np.random.default_rng(5)
    for cell in [(0, 0), (2, 1), (1, 2)]:
        xc = mesh.x_centers()[cell[0]]
        yc = mesh.y_centers()[cell[1]]
        x = xc + mesh.dx * rng.uniform(-0.5, 0.5, 7)
        y = yc + mesh.dy * rng.uniform(-0.5, 0.5, 7)
        got = evaluate_solution(fld, cell, (x, y))
        assert np.allclose(got, U_poly(x, y), rtol=1e-12, atol=1e-12)


def test_evaluate_single_mode_oracle():
    mesh = build_mesh([(0, 1), (0, 1)], [2, 2])
    fld = SolutionField.zeros(mesh, 2)
    g = mesh.ghost
    fld.R[g + 1, g + 0, 2, 4] = 3.0  # m2 component, xi*eta mode
    x = mesh.x_centers()[1] + mesh.dx * 0.15   # xi = 0.3
    y = mesh.y_centers()[0] - mesh.dy * 0.35   # eta = -0.7
    U = evaluate_solution(fld, (1, 0), (x, y))
    assert U[2] == pytest.approx(3.0 * 0.3 * -0.7)
    assert np.allclose(np.delete(U, 2), 0.0)


def test_local_divergence_zero_and_negative_control():
    mesh = build_mesh([(0, 1), (0, 2)], [3, 2])
    rng = np.random.default_rng(11)
    fld = SolutionField.zeros(mesh, 2)
    fld.Q[...] = rng.normal(0, 1, fld.Q.shape)
    scale = np.max(np.abs(fld.Q)) / min(mesh.dx, mesh.dy)
    for cell in [(0, 0), (2, 1)]:
        x = mesh.x_centers()[cell[0]] + mesh.dx * rng.uniform(-0.5, 0.5, 100)
        y = mesh.y_centers()[cell[1]] + mesh.dy * rng.uniform(-0.5, 0.5, 100)
        assert np.max(np.abs(local_divergence(fld, cell, (x, y)))) < 1e-12 * scale

    # backdoor: break one member's divergence cancellation
    bad = VectorBasis(2, mesh.dx, mesh.dy)
    m4 = bad.members[4]
    bad = VectorBasis(2, mesh.dx, mesh.dy,
                      members=bad.members[:4] + [(m4[0], -m4[1])] + bad.members[5:])
    fld.vbasis = bad
    assert np.max(np.abs(local_divergence(fld, (0, 0), (0.1, 0.3)))) > 0.1


def test_cell_average_assembly_2d():
    mesh = build_mesh([(0, 1), (0, 1)], [2, 2])
    fld = SolutionField.zeros(mesh, 1)
    g = mesh.ghost
    fld.Q[g:g + 2, g:g + 2, 0] = 0.7   # (0,1) member: mean B2
    fld.Q[g:g + 2, g:g + 2, 1] = -0.4  # (1,0) member: mean B1
    fld.R[g:g + 2, g:g + 2, :, 0] = np.arange(6.0)
    avg = fld.cell_averages()
    assert np.allclose(avg[..., 4], -0.4)
    assert np.allclose(avg[..., 5], 0.7)
    assert np.allclose(avg[..., R_COMP], np.arange(6.0))


def test_component_maps():
    assert list(R_COMP) == [0, 1, 2, 3, 6, 7]
    assert list(Q_COMP) == [4, 5]


def test_line_basis_norms():
    b = LineBasis(3, 0.1)
    assert np.allclose(b.norms, [1, 1 / 3, 4 / 45, 4 / 175], rtol=1e-13)
