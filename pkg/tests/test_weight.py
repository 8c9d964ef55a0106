"""Weight machinery: phase values, derivative table, geometry, cut-off."""

import math

import numpy as np
import pytest

from uhslab.grid import GridSpec
from uhslab.weight import (
    WeightParams,
    analytic_derivatives,
    boundary_plus,
    box_distance_range,
    check_pseudoconvexity,
    cutoff_chi,
    cutoff_with_derivatives,
    d1_d2,
    phi,
    pseudoconvexity_margins,
    psi,
    psi_on_grid,
    select_parameters,
    sign_condition_report,
)
from uhslab.weight import _ramp, _ramp_d1, _ramp_d2


def params_1d(x0=-1.0, y0=0.0, alpha=0.25, beta=0.5, gamma=0.1, epsilon=0.1,
              delta=0.1, rho=2.5, L=3.0, x_bounds=(0.0, 1.0)):
    return WeightParams.for_box(x_bounds[:1], x_bounds[1:], (x0,), (y0,),
                                alpha, beta, gamma, epsilon, delta, rho, L)


class TestBoxDistance:
    def test_outside_left(self):
        r, rt = box_distance_range((0.0,), (1.0,), (-1.0,))
        assert r == 1.0 and rt == 2.0

    def test_inside_gives_zero_min(self):
        r, rt = box_distance_range((0.0,), (1.0,), (0.5,))
        assert r == 0.0 and rt == 0.5

    def test_2d_corner(self):
        r, rt = box_distance_range((0.0, 0.0), (1.0, 1.0), (-3.0, -4.0))
        assert r == 5.0 and rt == pytest.approx(math.hypot(4.0, 5.0))


class TestPsiPhi:
    def test_vanishes_at_anchor(self):
        p = params_1d()
        assert psi(p, (-1.0,), (0.0,), 0.0) == 0.0
        assert phi(p, (-1.0,), (0.0,), 0.0) == 1.0

    def test_hand_value(self):
        p = params_1d()
        v = psi(p, (0.5,), (0.2,), 0.1)
        assert v == pytest.approx(2.25 - 0.01 - 0.005, abs=1e-14)
        w = phi(p, (0.5,), (0.2,), 0.1)
        assert w == pytest.approx(math.exp(0.1 * 2.235), rel=1e-14)
        assert w == pytest.approx(1.25046, abs=5e-5)

    def test_time_symmetry(self):
        p = params_1d()
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, y, t = rng.uniform(-2, 2, size=3)
            assert psi(p, (x,), (y,), t) == psi(p, (x,), (y,), -t)

    def test_monotone_in_each_distance(self):
        p = params_1d()
        # decreasing in |t| and |y - y0|, increasing in |x - x0|
        assert psi(p, (0.5,), (0.1,), 0.2) < psi(p, (0.5,), (0.1,), 0.1)
        assert psi(p, (0.5,), (0.4,), 0.1) < psi(p, (0.5,), (0.1,), 0.1)
        assert psi(p, (0.8,), (0.1,), 0.1) > psi(p, (0.5,), (0.1,), 0.1)

    def test_weight_decreases_away_from_t0(self):
        p = params_1d()
        g = GridSpec(1, 1, (0.0,), (1.0,), 1.0, 1.0, 9, 9, 9)
        ps = np.broadcast_to(psi_on_grid(p, g), g.shape)
        mid = g.t_index0
        s = 2.0
        w = np.exp(2 * s * np.exp(p.gamma * ps))
        assert np.all(w <= w[:, :, mid:mid + 1] + 1e-30)


class TestDerivativeTable:
    def test_d1_constant(self):
        p = params_1d(alpha=0.25)
        d1, d2 = d1_d2(p, (0.3,), (0.2,), 0.5)
        assert d1 == pytest.approx(-2.5, abs=1e-14)

    def test_d2_hand_value(self):
        p = params_1d()
        _, d2 = d1_d2(p, (0.5,), (0.0,), 0.0)  # |x-x0| = 1.5, y = y0
        assert d2 == pytest.approx(-9.0, abs=1e-14)

    def test_d2_bound_on_grid(self):
        p = params_1d()
        g = GridSpec(1, 1, (0.0,), (1.0,), p.L, 1.0, 9, 17, 5)
        xs = g.coords[0]
        ys = g.coords[1]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        _, d2 = d1_d2(p, (X,), (Y,), 0.0)
        r, _ = box_distance_range((0.0,), (1.0,), p.x0)
        bound = -4 * r**2 + 4 * p.alpha**2 * (2 * p.L) ** 2
        mask = np.abs(Y - p.y0[0]) <= 2 * p.L
        assert np.all(d2[mask] <= bound + 1e-12)

    def test_gradients_match_finite_differences(self):
        p = params_1d(gamma=0.1)
        g = GridSpec(1, 1, (0.0,), (1.0,), 3.0, 1.0, 9, 9, 9)
        der = analytic_derivatives(p, g)
        i, j, k = 4, 6, 2
        x, y, t = g.coords[0][i], g.coords[1][j], g.coords[2][k]
        h = 1e-4
        fd_x = (phi(p, (x + h,), (y,), t) - phi(p, (x - h,), (y,), t)) / (2 * h)
        fd_y = (phi(p, (x,), (y + h,), t) - phi(p, (x,), (y - h,), t)) / (2 * h)
        fd_t = (phi(p, (x,), (y,), t + h) - phi(p, (x,), (y,), t - h)) / (2 * h)
        assert der.grad_x[0][i, j, k] == pytest.approx(fd_x, rel=1e-6)
        assert der.grad_y[0][i, j, k] == pytest.approx(fd_y, rel=1e-6)
        assert der.dt_phi[i, j, k] == pytest.approx(fd_t, rel=1e-6)

    def test_laplacian_gap_identity(self):
        # lap_y phi - lap_x phi = gamma phi d1 + gamma^2 phi d2
        p = params_1d(gamma=0.2)
        g = GridSpec(1, 1, (0.0,), (1.0,), 3.0, 1.0, 7, 7, 7)
        der = analytic_derivatives(p, g)
        X = g.coord_grid(0)
        Y = g.coord_grid(1)
        d1, d2 = d1_d2(p, (np.broadcast_to(X, g.shape),),
                       (np.broadcast_to(Y, g.shape),), 0.0)
        rhs = p.gamma * der.phi * d1 + p.gamma**2 * der.phi * d2
        assert np.allclose(der.lap_gap, rhs, rtol=1e-12)

    def test_phi_positive(self):
        p = params_1d()
        g = GridSpec(1, 1, (0.0,), (1.0,), 3.0, 1.0, 7, 7, 7)
        assert np.all(analytic_derivatives(p, g).phi > 0)


class TestPseudoconvexity:
    def worked_grid(self):
        return GridSpec(1, 1, (0.0,), (1.0,), 3.0, 1.0, 9, 13, 9)

    def test_worked_example(self):
        p = params_1d(alpha=0.25, beta=0.5, L=3.0)
        d0 = check_pseudoconvexity(p, self.worked_grid())
        assert d0 == pytest.approx(math.sqrt(0.1875), abs=1e-12)

    def test_vanishing_shape_parameters_recover_r(self):
        p = params_1d(alpha=1e-9, beta=1e-9)
        d0 = check_pseudoconvexity(p, self.worked_grid())
        assert d0 == pytest.approx(1.0, abs=1e-6)

    def test_anchor_inside_box_rejected_at_construction(self):
        with pytest.raises(ValueError, match="outside"):
            params_1d(x0=0.5)

    def test_violation_raises_with_location(self):
        p = params_1d(alpha=0.25, beta=0.99, L=3.0)
        g = GridSpec(1, 1, (0.0,), (1.0,), 3.0, 2.0, 9, 13, 9)
        with pytest.raises(ValueError, match="pseudoconvexity violated"):
            check_pseudoconvexity(p, g)

    def test_both_margins_reported(self):
        p = params_1d(y0=0.5)
        lit, shf = pseudoconvexity_margins(p, self.worked_grid())
        assert lit != shf
        assert lit == pytest.approx(1 - 0.0625 * 9 - 0.25, abs=1e-12)


class TestBoundaryPlus:
    def test_1d_worked(self):
        g = GridSpec(1, 1, (0.0,), (1.0,), 1.0, 1.0, 5, 5, 5)
        faces = boundary_plus(g, (-1.0,))
        assert faces == ((0, "high"),)

    def test_1d_reflection_flips(self):
        g = GridSpec(1, 1, (0.0,), (1.0,), 1.0, 1.0, 5, 5, 5)
        assert boundary_plus(g, (2.0,)) == ((0, "low"),)

    def test_2d_far_left(self):
        g = GridSpec(2, 1, (0.0, 0.0), (1.0, 1.0), 1.0, 1.0, 5, 5, 5)
        faces = set(boundary_plus(g, (-5.0, 0.5)))
        assert faces == {(0, "high"), (1, "low"), (1, "high")}


class TestSelectParameters:
    def test_worked_geometry(self):
        sel = select_parameters((0.0,), (1.0,), (-1.0,), 10.0, 0.1)
        r, rt = 1.0, 2.0
        a, rho = sel.alpha, sel.rho
        assert a == pytest.approx(math.sqrt(0.04 * 0.1), rel=1e-12)
        # independent constraint checks
        assert rt / r < rho
        assert a * 100 / rho**2 < r**2 < rt**2 < a * 100
        assert r**2 > a**2 * 100
        assert 10.0 > rt / math.sqrt(a)
        assert sel.y0_radius == pytest.approx(10 - 10 / rho - 0.1, rel=1e-12)
        assert 10.0 / rho < 10.0 - 2 * sel.delta

    def test_selected_params_admissible(self):
        sel = select_parameters((0.0,), (1.0,), (-1.0,), 10.0, 0.1)
        p = WeightParams.for_box((0.0,), (1.0,), (-1.0,), (0.0,), sel.alpha,
                                 0.05, 0.1, 0.1, sel.delta, sel.rho, 10.0)
        p.assert_admissible()

    def test_infeasible_narrow_aperture(self):
        with pytest.raises(ValueError, match="infeasible geometry"):
            select_parameters((0.0,), (1.0,), (-1.0,), 3.0, 0.1)

    def test_boundary_aperture_infeasible(self):
        # L = r_tilde^2 / r makes the alpha window empty at its edge
        with pytest.raises(ValueError, match="infeasible geometry"):
            select_parameters((0.0,), (1.0,), (-1.0,), 4.0, 0.1)

    def test_randomized_feasible_geometries(self):
        rng = np.random.default_rng(1234)
        for _ in range(25):
            a = rng.uniform(-1.0, 1.0)
            b = a + rng.uniform(0.2, 2.0)
            x0 = a - rng.uniform(0.1, 3.0)
            r, rt = box_distance_range((a,), (b,), (x0,))
            L = (rt**2 / r) * rng.uniform(1.2, 4.0)
            eps = 0.01 * L
            sel = select_parameters((a,), (b,), (x0,), L, eps)
            p = WeightParams.for_box((a,), (b,), (x0,), (0.0,), sel.alpha,
                                     0.5, 0.1, eps, sel.delta, sel.rho, L)
            assert p.feasibility_violations() == []


class TestSignConditions:
    def grid_L10(self, T, nt=41):
        return GridSpec(1, 1, (0.0,), (1.0,), 10.0, T, 17, 41, nt)

    def test_worked_margins_beta_small(self):
        # alpha L^2 = 5 so the shell margin is exactly 1; core margin 0.2
        p = params_1d(alpha=0.05, beta=1e-9, rho=2.5, L=10.0, epsilon=0.1)
        rep = sign_condition_report(p, self.grid_L10(T=2.5))
        assert rep.margin_shell == pytest.approx(1.0, abs=1e-12)
        assert rep.margin_endcap == pytest.approx(rep.margin_shell, abs=1e-6)
        assert rep.margin_core == pytest.approx(0.2, abs=1e-12)
        assert rep.passed_shell and rep.passed_endcap and rep.passed_core
        # with beta ~ 0 the time band cannot go below -epsilon: reported, not raised
        assert not rep.passed_bands

    def test_endcap_picks_up_time_term(self):
        p = params_1d(alpha=0.05, beta=0.9, rho=2.5, L=10.0, epsilon=0.1)
        rep = sign_condition_report(p, self.grid_L10(T=2.5))
        assert rep.margin_endcap == pytest.approx(1.0 + 0.9 * 2.5**2, abs=1e-10)

    def test_certified_geometry_all_pass(self):
        # worked geometry at T = 12 with the selected alpha and rho
        sel = select_parameters((0.0,), (1.0,), (-1.0,), 10.0, 0.1)
        p = WeightParams.for_box((0.0,), (1.0,), (-1.0,), (0.0,), sel.alpha,
                                 0.05, 0.1, 0.1, sel.delta, sel.rho, 10.0)
        g = GridSpec(1, 1, (0.0,), (1.0,), 10.0, 12.0, 17, 81, 193)
        rep = sign_condition_report(p, g)
        assert rep.all_passed
        assert rep.delta > 0
        assert 10.0 / p.rho < 10.0 - 2 * rep.delta


class TestCutoff:
    def scenario(self):
        # small certified geometry: D=(0,0.25), x0=-0.25, L=2, T=2.5
        return WeightParams.for_box((0.0,), (0.25,), (-0.25,), (0.0,),
                                    0.1, 0.056, 0.1, 0.004, 0.125, 5.0, 2.0)

    def grid(self, ny=129, nt=81):
        return GridSpec(1, 1, (0.0,), (0.25,), 4.0, 2.5, 9, ny, nt)

    def test_ramp_midpoint_and_ends(self):
        assert _ramp(0.5) == 0.5
        assert _ramp(0.0) == 0.0 and _ramp(1.0) == 1.0
        assert _ramp_d1(0.0) == 0.0 and _ramp_d1(1.0) == 0.0
        assert _ramp_d2(0.0) == 0.0 and _ramp_d2(1.0) == 0.0

    def test_deep_interior_and_time_edges(self):
        p = self.scenario()
        g = self.grid()
        chi = cutoff_chi(p, g)
        mid = g.t_index0
        j0 = (g.ny - 1) // 2  # y = 0 = y0
        assert chi.values[0, j0, mid] == 1.0
        assert np.all(chi.values[:, :, 0] == 0.0)
        assert np.all(chi.values[:, :, -1] == 0.0)
        assert np.all((chi.values.real >= 0.0) & (chi.values.real <= 1.0))

    def test_band_midpoint_value(self):
        p = self.scenario()
        g = self.grid()
        chi = cutoff_chi(p, g)
        # |t| at the centre of [T-2d, T-d]: ramp argument 1/2
        t_mid = g.T - 1.5 * p.delta
        k = int(round((t_mid + g.T) / g.dt))
        assert abs(g.coords[2][k] - t_mid) < 1e-12
        j0 = (g.ny - 1) // 2
        assert chi.values[0, j0, k].real == pytest.approx(0.5, abs=1e-12)

    def test_derivative_supports(self):
        p = self.scenario()
        g = self.grid()
        cut = cutoff_with_derivatives(p, g)
        tt = np.abs(np.broadcast_to(g.coord_grid(2), g.shape))
        yy = np.abs(np.broadcast_to(g.coord_grid(1), g.shape))
        in_tband = (tt >= g.T - 2 * p.delta) & (tt <= g.T - p.delta)
        in_yband = (yy >= p.L - 2 * p.delta) & (yy <= p.L - p.delta)
        assert np.all(cut.dt[~in_tband] == 0.0)
        assert np.all(cut.grad_y[0][~in_yband] == 0.0)
        assert np.all(cut.lap_y[~in_yband] == 0.0)

    def test_profile_derivatives_match_finite_differences(self):
        from uhslab.weight import _profile

        inner, outer = 1.75, 1.875
        h = 1e-5
        for d in np.linspace(inner - 0.05, outer + 0.05, 41):
            vp, _, _ = _profile(d + h, inner, outer)
            vm, _, _ = _profile(d - h, inner, outer)
            v0, d1, d2 = _profile(d, inner, outer)
            assert d1 == pytest.approx((vp - vm) / (2 * h), abs=5e-5)
            assert d2 == pytest.approx((vp - 2 * v0 + vm) / h**2, abs=5e-3)

    def test_grid_derivatives_converge_to_analytic(self):
        p = self.scenario()
        errs = []
        for ny, nt in ((65, 321), (65, 641)):
            g = self.grid(ny=ny, nt=nt)
            cut = cutoff_with_derivatives(p, g)
            chi = cut.chi.values.real
            ht = g.dt
            dt_fd = (chi[:, :, 2:] - chi[:, :, :-2]) / (2 * ht)
            errs.append(np.max(np.abs(cut.dt[:, :, 1:-1] - dt_fd)))
        assert errs[1] < errs[0] / 3.4

    def test_degenerate_band_rejected(self):
        p = self.scenario()
        g = GridSpec(1, 1, (0.0,), (0.25,), 4.0, 0.2, 9, 33, 9)
        with pytest.raises(ValueError, match="degenerate"):
            cutoff_chi(p, g)


class TestD2Chain:
    def test_square_dominates_inner_expression(self):
        p = params_1d()
        g = GridSpec(1, 1, (0.0,), (1.0,), 3.0, 1.0, 9, 17, 9)
        X = np.broadcast_to(g.coord_grid(0), g.shape)
        Y = np.broadcast_to(g.coord_grid(1), g.shape)
        Tt = np.broadcast_to(g.coord_grid(2), g.shape)
        _, d2 = d1_d2(p, (X,), (Y,), Tt)
        inner = ((X - p.x0[0]) ** 2 - p.alpha**2 * (Y - p.y0[0]) ** 2
                 - p.beta**2 * Tt**2)
        mask = inner >= 0
        assert np.all(d2[mask] ** 2 >= 16 * inner[mask] ** 2 - 1e-12)


class TestParamValidation:
    def test_alpha_bounds_cited(self):
        with pytest.raises(ValueError, match=r"\(0, 1\)"):
            params_1d(alpha=1.5)

    def test_kappas(self):
        p = params_1d(gamma=0.3, epsilon=0.2)
        assert p.kappa1 == pytest.approx(math.exp(-0.06))
        assert p.kappa2 == pytest.approx(math.exp(0.06))
        assert p.kappa > 0 and p.kappa1 < p.kappa2
