import numpy as np
import pytest

from acns import spectral as sp
from acns.errors import NotSolenoidal
from acns.reference import ns_rhs, pressure_from_velocity, simulate_ns, taylor_green


@pytest.fixture
def grid():
    return sp.TorusGrid(2, 32)


class TestTaylorGreen:
    def test_closed_form_is_solenoidal(self, grid):
        u, _ = taylor_green(0.3, 1.0, grid)
        assert np.max(np.abs(sp.divergence(u).coeffs)) < 1e-15

    def test_rhs_is_pure_decay(self, grid):
        u, _ = taylor_green(0.0, 0.7, grid)
        assert np.allclose(ns_rhs(u, 0.7).coeffs, -1.4 * u.coeffs, atol=1e-14)

    def test_pressure_from_velocity(self, grid):
        u, p = taylor_green(0.2, 1.0, grid)
        assert np.allclose(pressure_from_velocity(u).coeffs, p.coeffs, atol=1e-15)

    def test_pressure_closes_momentum_equation(self, grid):
        # d_t u = nu Lap u - (u.grad)u - grad p must hold pointwise
        nu, t = 1.0, 0.1
        u, p = taylor_green(t, nu, grid)
        x = grid.coordinates()
        a = np.exp(-2 * nu * t)
        ux, uy = sp.transform_to_physical(u)
        adv_x = ux * a * np.cos(x[0]) * np.cos(x[1]) + uy * (-a * np.sin(x[0]) * np.sin(x[1]))
        adv_y = ux * a * np.sin(x[0]) * np.sin(x[1]) + uy * (-a * np.cos(x[0]) * np.cos(x[1]))
        gp = sp.transform_to_physical(sp.gradient(p))
        res_x = -2 * nu * ux - (-2 * nu * ux - adv_x - gp[0])
        res_y = -2 * nu * uy - (-2 * nu * uy - adv_y - gp[1])
        assert np.max(np.abs(res_x)) < 1e-14 and np.max(np.abs(res_y)) < 1e-14


class TestReferenceSolver:
    def test_tracks_closed_form(self, grid):
        u0, _ = taylor_green(0.0, 1.0, grid)
        traj = simulate_ns(u0, 1.0, 0.2, 1e-3, 1e-2)
        for s in traj:
            ue, pe = taylor_green(s.t, 1.0, grid)
            assert sp.sobolev_norm(s.u - ue, 0) < 1e-12
            assert sp.sobolev_norm(s.p - pe, 0) < 1e-12
        assert traj.eps == 0 and traj.meta["solver"] == "ns"

    def test_random_flow_stays_solenoidal(self):
        g = sp.TorusGrid(2, 16)
        rng = np.random.default_rng(0)
        v = sp.leray_P(sp.dealias(sp.random_field(g, rng, components=2, band=3)))
        traj = simulate_ns(v * 0.3, 0.5, 0.1, 1e-3, 1e-2)
        div = np.sum(1j * g.k * traj.u[-1], axis=0)
        assert np.max(np.abs(div)) < 1e-13

    def test_rejects_compressible_data(self, grid):
        x = grid.coordinates()
        u = sp.transform_to_spectral(np.stack([np.sin(x[0]), 0 * x[0]]), grid)
        with pytest.raises(NotSolenoidal):
            simulate_ns(u, 1.0, 0.1, 1e-2, 1e-2)
