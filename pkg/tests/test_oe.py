"""Damping-rate assembly and the exponential modal filter."""

import numpy as np
import pytest

from test_operator import (constant_field, mirror_field_y, random_field_1d,
                           random_field_2d, random_prim)

from mhdg.basis import R_COMP, SolutionField, local_divergence, project_initial
from mhdg.flux import max_signal_speed
from mhdg.mesh import build_mesh
from mhdg.oe import DampingProfile, damping_rates, edge_jump_integrals, oe_apply
from mhdg.operator import BoundaryRecipe, fill_ghosts

GAMMA = 5.0 / 3.0


class TestJumpIntegrals:
    def test_constant_field_all_zero(self):
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = constant_field(mesh, 2, np.array([1.0, 0.1, 0.2, -0.1, 0.3, -0.2, 0.1, 2.0]))
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        for m in range(3):
            assert np.all(edge_jump_integrals(fld, 0, m) == 0.0)
            assert np.all(edge_jump_integrals(fld, 1, m) == 0.0)

    def test_average_jump_measures_one(self):
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = SolutionField.zeros(mesh, 2)
        fld.R[..., 0] = 1.0  # admissibility is irrelevant here
        fld.R[2, 2, 0, 0] = 2.0  # density average bumped by 1 in cell (1,1)
        meas = edge_jump_integrals(fld, 0, 0)
        assert meas[1, 1, 0, 0] == pytest.approx(1.0, rel=1e-14)
        assert meas[2, 1, 0, 0] == pytest.approx(1.0, rel=1e-14)
        assert meas[1, 0, 0, 0] == 0.0
        meas_y = edge_jump_integrals(fld, 1, 0)
        assert meas_y[1, 1, 0, 0] == pytest.approx(1.0, rel=1e-14)
        assert meas_y[1, 2, 0, 0] == pytest.approx(1.0, rel=1e-14)

    def test_slope_break_measures_physical_slope(self):
        mesh = build_mesh([(0, 2), (0, 1)], [4, 3])
        fld = SolutionField.zeros(mesh, 2)
        c = 0.25
        fld.R[2, 2, 0, 1] = c  # xi-slope in cell (1,1) only
        meas = edge_jump_integrals(fld, 0, 1)
        slope = 2.0 * c / mesh.dx
        assert meas[1, 1, 0, 0] == pytest.approx(slope, rel=1e-13)
        assert meas[1, 1, 1, 0] == 0.0  # d/dy jump vanishes
        # magnetic block: xi-slope of B2 comes from the (0, xi) member
        fld2 = SolutionField.zeros(mesh, 2)
        fld2.Q[2, 2, 2] = c
        measq = edge_jump_integrals(fld2, 0, 1)
        assert measq[1, 1, 0, 5] == pytest.approx(slope, rel=1e-13)
        assert measq[1, 1, 0, 4] == 0.0

    def test_order_beyond_k_vanishes(self):
        rng = np.random.default_rng(2)
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = random_field_2d(rng, mesh, 1)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        # k=1 field: second derivatives are identically zero
        assert np.all(edge_jump_integrals(fld, 0, 2)[..., :] == 0.0)

    def test_1d_point_jump(self):
        mesh = build_mesh([(0, 1)], [4])
        fld = SolutionField.zeros(mesh, 2)
        fld.R[..., 0] = 1.0
        fld.R[2, 0, 0] = 2.0
        meas = edge_jump_integrals(fld, 0, 0)
        assert meas[1, 0] == pytest.approx(1.0, rel=1e-14)
        assert meas[2, 0] == pytest.approx(1.0, rel=1e-14)


class TestDampingRates:
    def test_rates_nonnegative_and_flat_component_zero(self):
        rng = np.random.default_rng(10)
        mesh = build_mesh([(0, 1), (0, 1)], [5, 4])
        fld = random_field_2d(rng, mesh, 2)
        sl = fld.interior
        # make m3 exactly constant: zero its average scatter and higher modes
        fld.R[..., 3, 0] = 0.07
        fld.R[..., 3, 1:] = 0.0
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        prof = damping_rates(fld, GAMMA)
        assert np.all(prof.rates_R >= 0.0)
        assert np.all(prof.rates_Q >= 0.0)
        assert np.all(prof.rates_R[..., 3] == 0.0)
        assert np.any(prof.rates_R[..., 0] > 0.0)

    def test_beta_is_cell_average_signal_speed(self):
        rng = np.random.default_rng(11)
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = random_field_2d(rng, mesh, 2)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        prof = damping_rates(fld, GAMMA)
        avg = fld.cell_averages()
        np.testing.assert_array_equal(prof.beta_x, max_signal_speed(avg, 0, GAMMA))
        np.testing.assert_array_equal(prof.beta_y, max_signal_speed(avg, 1, GAMMA))

    def test_rates_normalized_by_global_deviation(self):
        # piecewise-constant m1 with zero slopes: its deviation from the
        # cell averages vanishes identically, so only the domain-average
        # normalization produces the hand-computed rate
        mesh = build_mesh([(0.0, 1.0)], [4])
        fld = SolutionField.zeros(mesh, 1)
        fld.R[1:5, 0, 0] = 1.0
        fld.R[1:5, 7, 0] = 10.0
        fld.R[3, 1, 0] = 1.0  # m1 = indicator of interior cell 2
        fill_ghosts(fld, BoundaryRecipe.all_periodic(1))
        prof = damping_rates(fld, GAMMA)

        U2 = np.zeros(8)
        U2[0], U2[1], U2[7] = 1.0, 1.0, 10.0
        beta2 = float(max_signal_speed(U2, 0, GAMMA))
        # m=0 face coefficient: prefactor 1/(2(2k-1)) = 1/2, unit jump,
        # sup |m1 - avg(m1)| = |1 - 1/4| = 3/4; both faces of the cell jump
        sigma = 0.5 * 1.0 / 0.75
        assert np.isclose(prof.rates_R[2, 0, 1], beta2 * 2 * sigma / mesh.dx,
                          rtol=1e-13)
        # derivative jumps vanish for zero slopes: no m=1 contribution
        assert prof.rates_R[2, 1, 1] == 0.0
        # neighbor shares one jumping face, at its own wave-speed scale
        U1 = np.zeros(8)
        U1[0], U1[7] = 1.0, 10.0
        beta1 = float(max_signal_speed(U1, 0, GAMMA))
        assert np.isclose(prof.rates_R[1, 0, 1], beta1 * sigma / mesh.dx,
                          rtol=1e-13)

    def test_scale_consistency(self):
        # rho, m, E scaled by lam and B by sqrt(lam) leaves primitive
        # velocities, pressure-to-density ratios, and hence all rates intact
        rng = np.random.default_rng(12)
        mesh = build_mesh([(0, 1), (0, 1)], [5, 4])
        fld = random_field_2d(rng, mesh, 2)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        lam = 137.0
        scaled = fld.copy()
        scaled.R *= lam
        scaled.R[..., 4, :] *= np.sqrt(lam) / lam  # B3 scales with B
        scaled.Q *= np.sqrt(lam)
        p0 = damping_rates(fld, GAMMA)
        p1 = damping_rates(scaled, GAMMA)
        np.testing.assert_allclose(p1.rates_R, p0.rates_R, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(p1.rates_Q, p0.rates_Q, rtol=1e-13, atol=1e-13)

        out0 = oe_apply(fld.copy(), p0, 0.01)
        out1 = oe_apply(scaled, p1, 0.01)
        want_R = lam * out0.R
        want_R[..., 4, :] = np.sqrt(lam) * out0.R[..., 4, :]
        np.testing.assert_allclose(out1.R, want_R, rtol=1e-12)
        np.testing.assert_allclose(out1.Q, np.sqrt(lam) * out0.Q, rtol=1e-12)

    def test_smooth_sine_filter_nearly_identity(self):
        def ic(x):
            W = np.zeros(x.shape + (8,))
            W[..., 0] = 1.0 + 0.99 * np.sin(x)
            W[..., 1] = 1.0
            W[..., 4] = 0.1
            W[..., 7] = 1.0
            return W

        mesh = build_mesh([(0, 2 * np.pi)], [200])
        fld = project_initial(ic, mesh, 2, GAMMA)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(1))
        prof = damping_rates(fld, GAMMA)
        beta = prof.beta_x.max()
        dt = 0.12 * mesh.dx / beta
        before = fld.R.copy()
        oe_apply(fld, prof, dt)
        rel = np.abs(fld.R - before).max() / np.abs(before).max()
        # smooth-data damping must sit far below the k+1 truncation level,
        # or the filter would drag the convergence order down
        assert rel < 1e-9

    def test_strong_jump_damps_noticeably(self):
        mesh = build_mesh([(0, 1)], [8])
        fld = SolutionField.zeros(mesh, 2)
        prim = np.zeros((8, 8))
        prim[:, 0] = np.where(np.arange(8) < 4, 1.0, 0.125)
        prim[:, 7] = np.where(np.arange(8) < 4, 1.0, 0.1)
        from mhdg.state import conserved_from_primitive
        fld.R[1:9, :, 0] = conserved_from_primitive(prim, GAMMA)
        fld.R[1:9, 0, 1] = 0.01  # some slope content to damp
        fill_ghosts(fld, BoundaryRecipe.all_outflow(1))
        prof = damping_rates(fld, GAMMA)
        dt = 0.12 * mesh.dx / prof.beta_x.max()
        before = fld.R.copy()
        oe_apply(fld, prof, dt)
        fac = fld.R[4, 0, 1] / before[4, 0, 1]  # cell left of the jump
        assert fac < 0.999
        assert prof.rates_R[3:5, 0, 0].min() > 0.0


class TestApply:
    def test_zero_profile_is_identity(self):
        rng = np.random.default_rng(20)
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = random_field_2d(rng, mesh, 2)
        prof = DampingProfile(np.zeros((4, 3, 3, 6)), np.zeros((4, 3, 3)),
                              np.ones((4, 3)), np.ones((4, 3)))
        before_R, before_Q = fld.R.copy(), fld.Q.copy()
        oe_apply(fld, prof, 0.37)
        assert np.array_equal(fld.R, before_R)
        assert np.array_equal(fld.Q, before_Q)

    def test_known_quarter_factor(self):
        # k=1, both rates 1, dt = ln 2: degree-1 modes scale by exp(-2 ln 2)
        mesh = build_mesh([(0, 1)], [2])
        fld = SolutionField.zeros(mesh, 1)
        fld.R[1:3, :, 0] = 1.0
        fld.R[1:3, :, 1] = 0.5
        prof = DampingProfile(np.ones((2, 2, 8)), None, np.ones(2), None)
        oe_apply(fld, prof, np.log(2.0))
        np.testing.assert_allclose(fld.R[1:3, :, 1], 0.125, rtol=1e-14)
        assert np.all(fld.R[1:3, :, 0] == 1.0)

    def test_averages_bitwise_invariant(self):
        rng = np.random.default_rng(21)
        mesh = build_mesh([(0, 1), (0, 1)], [5, 4])
        fld = random_field_2d(rng, mesh, 3)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        avg0 = fld.cell_averages().copy()
        prof = damping_rates(fld, GAMMA)
        oe_apply(fld, prof, 0.05)
        assert np.array_equal(fld.cell_averages(), avg0)

    def test_ldf_preserved(self):
        rng = np.random.default_rng(22)
        mesh = build_mesh([(0, 1), (0, 1)], [4, 4])
        fld = random_field_2d(rng, mesh, 3)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        oe_apply(fld, damping_rates(fld, GAMMA), 0.1)
        for _ in range(20):
            cell = (rng.integers(0, 4), rng.integers(0, 4))
            x = mesh.xmin + (cell[0] + rng.uniform(0, 1)) * mesh.dx
            y = mesh.ymin + (cell[1] + rng.uniform(0, 1)) * mesh.dy
            assert abs(local_divergence(fld, cell, (x, y))) < 1e-12

    def test_monotone_in_degree(self):
        rng = np.random.default_rng(23)
        mesh = build_mesh([(0, 1), (0, 1)], [5, 4])
        fld = random_field_2d(rng, mesh, 3, eps=0.05)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        prof = damping_rates(fld, GAMMA)
        cum_R = np.cumsum(prof.rates_R, axis=2)
        assert np.all(np.diff(cum_R, axis=2) >= 0.0)
        cum_Q = np.cumsum(prof.rates_Q, axis=2)
        assert np.all(np.diff(cum_Q, axis=2) >= 0.0)

    def test_infinite_time_collapses_to_averages(self):
        rng = np.random.default_rng(24)
        mesh = build_mesh([(0, 1), (0, 1)], [4, 3])
        fld = random_field_2d(rng, mesh, 2)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        prof = damping_rates(fld, GAMMA)
        # every component carries jumps, so every rate sum is positive
        oe_apply(fld, prof, 1e9)
        sl = fld.interior
        assert np.abs(fld.R[sl][..., 1:]).max() < 1e-30
        assert np.abs(fld.Q[sl][..., 2:]).max() < 1e-30

    def test_mirror_equivariance_bitwise(self):
        rng = np.random.default_rng(25)
        mesh = build_mesh([(0, 1), (-0.5, 0.5)], [4, 6])
        fld = random_field_2d(rng, mesh, 2)
        fill_ghosts(fld, BoundaryRecipe.all_periodic(2))
        mfld = mirror_field_y(fld)

        prof = damping_rates(fld, GAMMA)
        mprof = damping_rates(mfld, GAMMA)
        assert np.array_equal(mprof.rates_R, prof.rates_R[:, ::-1])
        assert np.array_equal(mprof.rates_Q, prof.rates_Q[:, ::-1])

        out = oe_apply(fld, prof, 0.03)
        mout = oe_apply(mfld, mprof, 0.03)
        want = mirror_field_y(out)
        assert np.array_equal(mout.R, want.R)
        assert np.array_equal(mout.Q, want.Q)
