import numpy as np
import pytest
from scipy.linalg import expm

from acns import spectral as sp
from acns.errors import CflViolation
from acns.reference import taylor_green
from acns.solver import (
    ACState,
    AcousticViscousPropagator,
    Trajectory,
    ac_rhs,
    acoustic_viscous_propagator,
    cumulative_interpolatory,
    energy_loss_constant,
    global_energy_check,
    make_initial_data,
    nonlinear_term,
    simulate,
    step,
)


@pytest.fixture
def grid():
    return sp.TorusGrid(2, 16)


def longitudinal_mode(grid, kx=1, ky=2):
    """u = khat sin(k.x), p = 0: a pure acoustic mode."""
    x = grid.coordinates()
    ph = kx * x[0] + ky * x[1]
    km = np.hypot(kx, ky)
    u = np.stack([kx / km * np.sin(ph), ky / km * np.sin(ph)])
    return sp.transform_to_spectral(u, grid), sp.transform_to_spectral(np.zeros((1,) + grid.shape), grid)


class TestPropagator:
    @pytest.mark.parametrize("eps,nu", [(1e-1, 1.0), (1e-3, 1.0), (1.0, 3.0), (1e-2, 0.0)])
    def test_matches_matrix_exponential(self, grid, eps, nu):
        # per mode: d/dt (a, p) = [[-nu k^2, -i|k|], [-i|k|/eps, 0]] (a, p)
        rng = np.random.default_rng(0)
        u = sp.random_field(grid, rng, components=2)
        p = sp.random_field(grid, rng)
        t = 0.37
        prop = AcousticViscousPropagator(grid, eps, nu, t)
        un, pn = prop.apply(u.coeffs, p.coeffs[0])
        for idx in [(1, 2), (3, 0), (5, 5), (0, 1)]:
            k = np.array([grid.k[0][idx], grid.k[1][idx]])
            km = np.linalg.norm(k)
            kh = k / km
            M = np.array([[-nu * km**2, -1j * km], [-1j * km / eps, 0]])
            a0 = kh @ u.coeffs[(slice(None),) + idx]
            a1, p1 = expm(M * t) @ np.array([a0, p.coeffs[(0,) + idx]])
            assert kh @ un[(slice(None),) + idx] == pytest.approx(a1, rel=1e-10, abs=1e-12)
            assert pn[idx] == pytest.approx(p1, rel=1e-10, abs=1e-12)
            # transverse part decays like the heat equation
            tr0 = u.coeffs[(slice(None),) + idx] - a0 * kh
            tr1 = un[(slice(None),) + idx] - (kh @ un[(slice(None),) + idx]) * kh
            assert np.allclose(tr1, np.exp(-nu * km**2 * t) * tr0, atol=1e-13)

    def test_group_property(self, grid):
        rng = np.random.default_rng(1)
        u = sp.random_field(grid, rng, components=2)
        p = sp.random_field(grid, rng)
        s = ACState(u, p, 1e-2)
        two = acoustic_viscous_propagator(acoustic_viscous_propagator(s, 0.5, 0.1), 0.5, 0.1)
        one = acoustic_viscous_propagator(s, 0.5, 0.2)
        assert np.allclose(two.u.coeffs, one.u.coeffs, atol=1e-13)
        assert np.allclose(two.p.coeffs, one.p.coeffs, atol=1e-13)

    def test_overdamped_small_mu_is_stable(self):
        # eps chosen so that mu^2 = lam^2 - k^2/eps is tiny and positive at |k| = 1
        g = sp.TorusGrid(2, 8)
        eps = 4.0 / (1.0 + 1e-14)
        prop = AcousticViscousPropagator(g, eps, 1.0, 1.0)
        assert np.all(np.isfinite(prop.C)) and np.all(np.isfinite(prop.S))


class TestNonlinearTerm:
    def test_shear_flow_self_advection_vanishes(self, grid):
        x = grid.coordinates()
        u = sp.transform_to_spectral(np.stack([np.sin(x[1]), 0 * x[0]]), grid)
        assert np.max(np.abs(nonlinear_term(u).coeffs)) < 1e-14

    def test_matches_physical_evaluation(self, grid):
        x = grid.coordinates()
        ux, uy = np.sin(x[0]) * np.cos(x[1]), 0.5 * np.sin(x[0])
        u = sp.transform_to_spectral(np.stack([ux, uy]), grid)
        # (u.grad)u + 1/2 div(u) u computed by hand
        dux = (np.cos(x[0]) * np.cos(x[1]), -np.sin(x[0]) * np.sin(x[1]))
        duy = (0.5 * np.cos(x[0]), 0 * x[0])
        div = dux[0] + duy[1]
        ex = ux * dux[0] + uy * dux[1] + 0.5 * div * ux
        ey = ux * duy[0] + uy * duy[1] + 0.5 * div * uy
        got = sp.transform_to_physical(nonlinear_term(u))
        assert np.allclose(got, np.stack([ex, ey]), atol=1e-13)

    def test_energy_neutral(self, grid):
        # (N(u), u) = 0 for the skew-symmetric form, whatever div u is
        u = sp.random_field(grid, np.random.default_rng(2), components=2)
        u = sp.dealias(u)
        assert abs(sp.inner(nonlinear_term(u), u)) < 1e-12 * sp.sobolev_norm(u, 0) ** 3


class TestStepping:
    def test_rhs_of_rest_is_zero(self, grid):
        s = ACState(sp.SpectralField.zeros(grid, 2), sp.SpectralField.zeros(grid), 0.1)
        du, dp = ac_rhs(s, 1.0)
        assert np.all(du.coeffs == 0) and np.all(dp.coeffs == 0)

    def test_cfl_violation(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        s = make_initial_data(u * 100.0, 0.1)
        with pytest.raises(CflViolation):
            step(s, 1.0, 0.5)

    def test_linear_run_is_exact(self, grid):
        u, p = longitudinal_mode(grid)
        eps, nu, T = 1e-2, 0.3, 0.2
        traj = simulate(u, eps, nu, T, 0.05, 0.1, p0=p, nonlinear=False)
        km = np.sqrt(5.0)
        M = np.array([[-nu * km**2, -1j * km], [-1j * km / eps, 0]])
        a1, p1 = expm(M * T) @ np.array([1.0, 0.0])
        x = grid.coordinates()
        ph = x[0] + 2 * x[1]
        exp_u = np.stack([np.sin(ph), 2 * np.sin(ph)]) / km * a1.real
        # pressure: coefficient -i p1/2 on +k, cos/sin bookkeeping via real transform
        got = sp.transform_to_physical(traj[-1].u)
        assert np.allclose(got, exp_u, atol=1e-12)
        assert np.all(np.isfinite(traj.p))

    def test_heat_decay_of_transverse_mode(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        traj = simulate(u, 1e-3, 1.0, 0.1, 0.01, 0.05, p0=sp.SpectralField.zeros(grid), nonlinear=False)
        assert np.allclose(traj.u[-1], np.exp(-2 * 0.1) * u.coeffs, atol=1e-13)

    def test_initial_pressure_balances_momentum(self, grid):
        u, p_exact = taylor_green(0.0, 1.0, grid)
        s = make_initial_data(u, 1e-2)
        assert np.allclose(s.p.coeffs, p_exact.coeffs, atol=1e-14)
        du, _ = ac_rhs(s, 1.0)
        # Taylor-Green is an exact solution: du/dt = -2 nu u
        assert np.allclose(du.coeffs, -2 * u.coeffs, atol=1e-13)


class TestTrajectory:
    def test_save_load(self, tmp_path, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        traj = simulate(u, 1e-2, 1.0, 0.04, 0.01, 0.02)
        traj.save(tmp_path / "run")
        back = Trajectory.load(tmp_path / "run")
        assert len(back) == 3 and back.eps == traj.eps and back.dt_rec == traj.dt_rec
        assert np.allclose(back.u, traj.u, atol=1e-14)
        assert np.allclose(back.p, traj.p, atol=1e-14)

    def test_indexing(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        traj = simulate(u, 1e-2, 1.0, 0.04, 0.01, 0.02)
        assert traj.T == pytest.approx(0.04)
        assert traj[1].t == pytest.approx(0.02)
        assert np.allclose(traj.times, [0, 0.02, 0.04])

    def test_divisibility_enforced(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        with pytest.raises(ValueError):
            simulate(u, 1e-2, 1.0, 0.05, 0.003, 0.01)


class TestEnergy:
    def test_cumulative_quadrature_order(self):
        errs = []
        for n in (41, 81):
            t = np.linspace(0, 1, n)
            errs.append(abs(cumulative_interpolatory(np.cos(3 * t), t[1])[-1] - np.sin(3) / 3))
        assert errs[0] / errs[1] > 2**5.5

    def test_linear_run_conserves_energy_budget(self, grid):
        rng = np.random.default_rng(3)
        u = sp.dealias(sp.random_field(grid, rng, components=2, band=3))
        traj = simulate(u, 1e-2, 0.5, 0.5, 2e-3, 2e-3, nonlinear=False)
        rep = global_energy_check(traj)
        assert abs(rep.max_relative_deficit()) < 1e-8
        assert abs(rep.min_relative_deficit()) < 1e-8

    def test_nonlinear_loss_is_second_order(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        C, losses = energy_loss_constant(u, 1e-2, 1.0, 0.2, 2e-3, 4e-3)
        assert losses[0] / losses[1] == pytest.approx(4.0, rel=0.05)
        assert C > 0

    def test_eps_pressure_bounded_by_energy(self, grid):
        u, _ = taylor_green(0.0, 1.0, grid)
        traj = simulate(u, 1e-1, 1.0, 0.2, 2e-3, 4e-3)
        rep = global_energy_check(traj)
        kp = grid.volume * np.sum(np.abs(traj.p) ** 2, axis=(1, 2))
        assert np.all(traj.eps * kp <= 2 * rep.E0)
