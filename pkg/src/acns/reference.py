"""Incompressible reference solver and the Taylor-Green oracle."""

from __future__ import annotations

import numpy as np

from . import spectral as sp
from .errors import NonFinite, NotSolenoidal
from .solver import Trajectory, _check_divides, _comp, poisson_pressure_hat
from .spectral import SpectralField

DIV_TOL = 1e-12


def _check_solenoidal(grid, u_hat, tol=DIV_TOL):
    div = np.sum(1j * grid.k * u_hat, axis=0)
    dnorm = np.sqrt(np.sum(np.abs(div) ** 2))
    scale = np.sqrt(np.sum(grid.k2 * np.abs(u_hat) ** 2))
    if dnorm > tol * max(scale, np.finfo(float).tiny):
        raise NotSolenoidal(f"relative divergence {dnorm / scale:.3e} exceeds {tol:g}")


def advection_hat(grid, u_hat):
    """Dealiased coefficients of (u.grad)u."""
    d = grid.dim
    u_hat = u_hat * grid.dealias_mask
    u = sp.inv(grid, u_hat)
    adv = np.zeros_like(u)
    for j in range(d):
        du_j = sp.inv(grid, 1j * grid.k[j] * u_hat)
        for i in range(d):
            _comp(grid, adv, i)[...] += _comp(grid, u, j) * _comp(grid, du_j, i)
    return sp.fwd(grid, adv) * grid.dealias_mask


def _projected_advection(grid, u_hat):
    a = advection_hat(grid, u_hat)
    return a - sp.q_hat(grid, a)


def ns_rhs(u, nu):
    """P(nu Lap u - (u.grad)u) for a divergence-free u."""
    g = u.grid
    _check_solenoidal(g, u.coeffs)
    return SpectralField(g, -nu * g.k2 * u.coeffs - _projected_advection(g, u.coeffs))


def pressure_from_velocity(u):
    """Zero-mean p with Lap p = -sum_ij d_i u_j d_j u_i.

    With this sign grad p + Q((u.grad)u) = 0, which is what the momentum
    equation requires; the opposite sign leaves a residual of 2 Q((u.grad)u).
    """
    g = u.grid
    _check_solenoidal(g, u.coeffs)
    return SpectralField(g, poisson_pressure_hat(g, u.coeffs))


def simulate_ns(u0, nu, T, dt, dt_rec):
    """Integrating-factor RK4 for the projected equations.

    The pressure slot of each recorded sample holds pressure_from_velocity;
    eps is stored as 0 to mark the run as incompressible.
    """
    g = u0.grid
    _check_solenoidal(g, u0.coeffs)
    per_rec = _check_divides(dt, dt_rec, "dt/dt_rec")
    nrec = _check_divides(dt_rec, T, "dt_rec/T")
    E = np.exp(-nu * g.k2 * dt / 2)
    E2 = E * E
    f = lambda v: -_projected_advection(g, v)
    u = u0.coeffs * g.dealias_mask
    u = u - sp.q_hat(g, u)
    us = np.empty((nrec + 1,) + u.shape, dtype=complex)
    ps = np.empty((nrec + 1,) + g.shape, dtype=complex)
    us[0], ps[0] = u, poisson_pressure_hat(g, u)
    for r in range(1, nrec + 1):
        for _ in range(per_rec):
            k1 = f(u)
            k2 = f(E * (u + 0.5 * dt * k1))
            k3 = f(E * u + 0.5 * dt * k2)
            k4 = f(E2 * u + dt * E * k3)
            u = E2 * u + (dt / 6.0) * (E2 * k1 + 2 * E * (k2 + k3) + k4)
        if not np.all(np.isfinite(u)):
            raise NonFinite(f"non-finite coefficients at t={r * dt_rec:.6g}")
        us[r], ps[r] = u, poisson_pressure_hat(g, u)
    return Trajectory(g, 0.0, nu, dt_rec, us, ps, 0.0, dict(solver="ns", dt=dt, T=T))


def taylor_green(t, nu, grid):
    """Closed-form decaying vortex (u, p) at time t.

    u = e^{-2 nu t} (sin x cos y, -cos x sin y, 0),
    p = e^{-4 nu t} (cos 2x + cos 2y) / 4.
    The velocity is an exact solution only for L = 2 pi (unit wavenumbers).
    """
    x = grid.coordinates()
    a = np.exp(-2 * nu * t)
    comps = [a * np.sin(x[0]) * np.cos(x[1]), -a * np.cos(x[0]) * np.sin(x[1])]
    if grid.dim == 3:
        comps.append(np.zeros(grid.shape))
    p = np.exp(-4 * nu * t) * (np.cos(2 * x[0]) + np.cos(2 * x[1])) / 4
    return sp.transform_to_spectral(np.stack(comps), grid), sp.transform_to_spectral(p, grid)
