"""Artificial compressibility time integration.

The system is

    du/dt + grad p = nu Lap u - (u.grad)u - 1/2 (div u) u
    eps dp/dt + div u = 0

advanced by Strang splitting: half a step of the exact linear (acoustic +
viscous) propagator, one classical RK4 step on the nonlinear terms, half a
step of the propagator again.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import spectral as sp
from .errors import CflViolation, NonFinite
from .spectral import SpectralField, TorusGrid

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ACState:
    u: SpectralField
    p: SpectralField
    eps: float
    t: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.u.grid.same_as(self.p.grid):
            raise ValueError("u and p live on different grids")
        if self.u.ncomp != self.u.grid.dim or not self.p.is_scalar:
            raise ValueError("u must be a vector field and p a scalar field")

    @property
    def grid(self):
        return self.u.grid


@dataclass(frozen=True, eq=False)
class Sample:
    """One recorded instant of a trajectory (also used for eps = 0 reference runs)."""

    u: SpectralField
    p: SpectralField
    eps: float
    t: float


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled (u, p) history.

    ``u`` has shape ``(S, dim, n, ..., n)`` and ``p`` shape ``(S, n, ..., n)``,
    both Fourier coefficients.  ``eps == 0`` marks an incompressible run.
    """

    grid: TorusGrid
    eps: float
    nu: float
    dt_rec: float
    u: np.ndarray
    p: np.ndarray
    t0: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u.shape[0] != self.p.shape[0]:
            raise ValueError("u and p sample counts differ")
        if self.u.shape[1:] != (self.grid.dim,) + self.grid.shape or self.p.shape[1:] != self.grid.shape:
            raise ValueError("trajectory arrays do not match the grid")
        if not self.dt_rec > 0:
            raise ValueError("dt_rec must be positive")

    def __len__(self):
        return self.u.shape[0]

    @property
    def times(self):
        return self.t0 + self.dt_rec * np.arange(len(self))

    @property
    def T(self):
        return self.t0 + self.dt_rec * (len(self) - 1)

    def __getitem__(self, i):
        t = self.t0 + self.dt_rec * (i % len(self))
        return Sample(SpectralField(self.grid, self.u[i]), SpectralField(self.grid, self.p[i]), self.eps, t)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def state(self, i):
        s = self[i]
        return ACState(s.u, s.p, self.eps, s.t)

    def save(self, directory):
        """Run directory: ``manifest.json`` plus one snapshot per sample and field."""
        directory = Path(directory)
        (directory / "samples").mkdir(parents=True, exist_ok=True)
        for i, s in enumerate(self):
            sp.write_snapshot(s.u, directory / "samples" / f"u_{i:06d}", s.t)
            sp.write_snapshot(s.p, directory / "samples" / f"p_{i:06d}", s.t)
        manifest = dict(
            self.grid.to_dict(),
            eps=self.eps,
            nu=self.nu,
            dt_rec=self.dt_rec,
            t0=self.t0,
            T=self.T,
            samples=len(self),
            solver=self.meta.get("solver", "ac"),
            meta=self.meta,
        )
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        return directory

    @classmethod
    def load(cls, directory):
        directory = Path(directory)
        m = json.loads((directory / "manifest.json").read_text())
        grid = TorusGrid(m["dim"], m["n"], m["L"])
        us, ps = [], []
        for i in range(m["samples"]):
            us.append(sp.read_snapshot(directory / "samples" / f"u_{i:06d}")[0].coeffs)
            ps.append(sp.read_snapshot(directory / "samples" / f"p_{i:06d}")[0].coeffs[0])
        return cls(grid, m["eps"], m["nu"], m["dt_rec"], np.array(us), np.array(ps), m["t0"], m.get("meta", {}))


# ---------------------------------------------------------------- nonlinear terms


def _comp(grid, a, i):
    return a[(Ellipsis, i) + (slice(None),) * grid.dim]


def nonlinear_parts(grid, u_hat):
    """Physical samples of ((u.grad)u, (div u) u) for coefficient arrays.

    Leading (time) axes are allowed in front of the component axis.
    """
    d = grid.dim
    u_hat = u_hat * grid.dealias_mask
    # one batched transform: u, then d_j u for j = 0..d-1
    stacked = np.concatenate([u_hat] + [1j * grid.k[j] * u_hat for j in range(d)], axis=-d - 1)
    phys = sp.inv(grid, stacked)
    u = _block(grid, phys, 0)
    adv = np.zeros_like(u)
    div = 0.0
    for j in range(d):
        du_j = _block(grid, phys, j + 1)
        uj = _comp(grid, u, j)
        for i in range(d):
            _comp(grid, adv, i)[...] += uj * _comp(grid, du_j, i)
        div = div + _comp(grid, du_j, j)
    stab = u * np.expand_dims(div, axis=-d - 1)
    return adv, stab


def _block(grid, a, b):
    d = grid.dim
    return a[(Ellipsis, slice(b * d, (b + 1) * d)) + (slice(None),) * d]


def nonlinear_hat(grid, u_hat):
    """Dealiased coefficients of (u.grad)u + 1/2 (div u) u."""
    adv, stab = nonlinear_parts(grid, u_hat)
    return sp.fwd(grid, adv + 0.5 * stab) * grid.dealias_mask


def nonlinear_term(u):
    return SpectralField(u.grid, nonlinear_hat(u.grid, u.coeffs))


def ac_rhs(state, nu):
    """Time derivatives (du/dt, dp/dt) of the full system at ``state``."""
    g = state.grid
    u, p = state.u.coeffs, state.p.coeffs[0]
    du = nu * (-g.k2) * u - nonlinear_hat(g, u) - 1j * g.k * p
    dp = -np.sum(1j * g.k * u, axis=0) / state.eps
    return SpectralField(g, du), SpectralField(g, dp)


# ---------------------------------------------------------------- linear propagator


class AcousticViscousPropagator:
    """Exact per-mode flow of du/dt = nu Lap u - grad p, eps dp/dt = -div u.

    Per mode the transverse velocity decays like exp(-nu|k|^2 t).  The
    longitudinal amplitude a = khat.u and the pressure obey a 2x2 linear
    system with matrix M = [[-nu|k|^2, -i|k|], [-i|k|/eps, 0]], whose
    exponential is written as C I + S (M - trace/2 I) with
    C = e^{lt} cosh(mu t), S = e^{lt} sinh(mu t)/mu, l = trace/2.
    """

    def __init__(self, grid, eps, nu, t):
        self.grid, self.eps, self.nu, self.t = grid, eps, nu, t
        k2 = grid.k2
        kmag = grid.kmag
        lam = -0.5 * nu * k2
        mu2 = lam * lam - k2 / eps
        C = np.empty_like(k2)
        S = np.empty_like(k2)
        osc = mu2 < 0
        w = np.sqrt(-mu2[osc])
        C[osc] = np.exp(lam[osc] * t) * np.cos(w * t)
        S[osc] = np.exp(lam[osc] * t) * t * np.sinc(w * t / np.pi)
        real = ~osc
        mu = np.sqrt(mu2[real])
        l2 = lam[real] - mu  # both eigenvalues are <= 0; l2 is the larger in size
        e2 = np.exp(l2 * t)
        # e^{l1 t} - e^{l2 t} = e^{l2 t} expm1(2 mu t), no cancellation for small mu
        diff = e2 * np.expm1(2 * mu * t)
        C[real] = e2 + 0.5 * diff
        safe = np.where(mu > 0, mu, 1.0)
        S[real] = np.where(mu > 0, diff / (2 * safe), t * np.exp(lam[real] * t))
        self.C, self.S = C, S
        self.decay = np.exp(-nu * k2 * t)
        self.khat = np.where(kmag > 0, grid.k / np.where(kmag > 0, kmag, 1.0), 0.0)
        self.half_nuk2 = 0.5 * nu * k2
        self.kmag = kmag

    def apply(self, u_hat, p_hat):
        a = np.sum(self.khat * u_hat, axis=0)
        ut = u_hat - a * self.khat
        C, S, h, km = self.C, self.S, self.half_nuk2, self.kmag
        a_new = C * a + S * (-h * a - 1j * km * p_hat)
        p_new = C * p_hat + S * (-1j * km * a / self.eps + h * p_hat)
        return self.decay * ut + a_new * self.khat, p_new


def acoustic_viscous_propagator(state, nu, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    prop = AcousticViscousPropagator(state.grid, state.eps, nu, dt)
    u, p = prop.apply(state.u.coeffs, state.p.coeffs[0])
    g = state.grid
    return ACState(SpectralField(g, u), SpectralField(g, p), state.eps, state.t + dt)


# ---------------------------------------------------------------- stepping


def advective_cfl(grid, u_hat, dt):
    u = sp.inv(grid, u_hat)
    return dt * float(np.sum(np.max(np.abs(u).reshape(grid.dim, -1), axis=1))) / grid.dx


def _rk4_nonlinear(grid, u, dt):
    f = lambda v: -nonlinear_hat(grid, v)
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Stepper:
    def __init__(self, grid, eps, nu, dt, nonlinear=True):
        self.grid, self.dt, self.nonlinear = grid, dt, nonlinear
        self.half = AcousticViscousPropagator(grid, eps, nu, 0.5 * dt)

    def __call__(self, u, p):
        if self.nonlinear:
            cfl = advective_cfl(self.grid, u, self.dt)
            if cfl > 1:
                raise CflViolation(f"advective CFL {cfl:.3f} > 1 at dt={self.dt}")
        u, p = self.half.apply(u, p)
        if self.nonlinear:
            u = _rk4_nonlinear(self.grid, u, self.dt)
        return self.half.apply(u, p)


def step(state, nu, dt, nonlinear=True):
    """One Strang step: half propagator, RK4 on the nonlinear terms, half propagator."""
    g = state.grid
    u, p = _Stepper(g, state.eps, nu, dt, nonlinear)(state.u.coeffs, state.p.coeffs[0])
    return ACState(SpectralField(g, u), SpectralField(g, p), state.eps, state.t + dt)


# ---------------------------------------------------------------- initial data


def poisson_pressure_hat(grid, u_hat):
    """Solve Lap p = -sum_ij d_i u_j d_j u_i with zero mean.

    This is the pressure balancing the momentum equation of a
    divergence-free flow: grad p = -Q((u.grad)u).
    """
    d = grid.dim
    u_hat = u_hat * grid.dealias_mask
    grads = [sp.inv(grid, 1j * grid.k[j] * u_hat) for j in range(d)]  # grads[j][..., i] = d_j u_i
    src = 0.0
    for i in range(d):
        for j in range(d):
            src = src + _comp(grid, grads[i], j) * _comp(grid, grads[j], i)
    src_hat = sp.fwd(grid, src) * grid.dealias_mask
    k2 = np.where(grid.k2 > 0, grid.k2, 1.0)
    return np.where(grid.k2 > 0, src_hat / k2, 0.0)


def make_initial_data(u0, eps):
    """(u0, p0) with u0 unchanged and p0 from the incompressible pressure equation.

    Both are independent of eps, so sqrt(eps) p0 -> 0 as eps -> 0.
    """
    g = u0.grid
    p0 = poisson_pressure_hat(g, u0.coeffs)
    return ACState(u0, SpectralField(g, p0), eps, 0.0)


def _check_divides(a, b, what):
    r = b / a
    if abs(r - round(r)) > 1e-9 * max(1.0, r) or round(r) < 1:
        raise ValueError(f"{what}: {a} does not divide {b}")
    return int(round(r))


def simulate(u0, eps, nu, T, dt, dt_rec, p0=None, nonlinear=True):
    """Integrate from t = 0 to T, recording every ``dt_rec``.

    ``p0`` overrides the default Poisson initial pressure.  ``nonlinear=False``
    runs the linear (acoustic + viscous) system only.
    """
    g = u0.grid
    per_rec = _check_divides(dt, dt_rec, "dt/dt_rec")
    nrec = _check_divides(dt_rec, T, "dt_rec/T")
    state = make_initial_data(u0, eps)
    u = state.u.coeffs * (g.dealias_mask if nonlinear else 1)
    p = state.p.coeffs[0] if p0 is None else np.asarray(p0.coeffs[0], dtype=complex)
    stepper = _Stepper(g, eps, nu, dt, nonlinear)
    us = np.empty((nrec + 1,) + u.shape, dtype=complex)
    ps = np.empty((nrec + 1,) + p.shape, dtype=complex)
    us[0], ps[0] = u, p
    for r in range(1, nrec + 1):
        for _ in range(per_rec):
            u, p = stepper(u, p)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
            raise NonFinite(f"non-finite coefficients at t={r * dt_rec:.6g} (eps={eps}, dt={dt})")
        us[r], ps[r] = u, p
    log.debug("AC run eps=%g nu=%g T=%g dt=%g done", eps, nu, T, dt)
    meta = dict(solver="ac", dt=dt, T=T, nonlinear=nonlinear)
    return Trajectory(g, eps, nu, dt_rec, us, ps, 0.0, meta)


# ---------------------------------------------------------------- energy


@dataclass
class EnergyReport:
    t: np.ndarray
    E: np.ndarray
    D: np.ndarray
    deficit: np.ndarray

    @property
    def E0(self):
        return float(self.E[0])

    def max_relative_deficit(self):
        return float(np.max(self.deficit) / self.E0) if self.E0 > 0 else float(np.max(np.abs(self.deficit)))

    def min_relative_deficit(self):
        return float(np.min(self.deficit) / self.E0) if self.E0 > 0 else -float(np.max(np.abs(self.deficit)))


def energy_series(traj):
    """E(t) = 1/2 ||u||^2 + eps/2 ||p||^2 and G(t) = ||grad u||^2 at each sample."""
    g = traj.grid
    ku = sp.sobolev_sq(g, traj.u, 0, False)
    kp = g.volume * np.sum(np.abs(traj.p) ** 2, axis=tuple(range(1, g.dim + 1)))
    grad = sp.sobolev_sq(g, traj.u, 1, True)
    return 0.5 * ku + 0.5 * traj.eps * kp, grad


def _interval_weights(order):
    """Weights integrating the degree-(order-1) interpolant over one interval.

    Row j holds the weights for the interval [x_j, x_{j+1}] of the stencil
    x_0..x_{order-1} (unit spacing).
    """
    x = np.arange(order, dtype=float)
    V = np.vander(x, increasing=True).T  # V[m, i] = x_i^m
    rows = []
    for j in range(order - 1):
        moments = np.array([((j + 1) ** (m + 1) - j ** (m + 1)) / (m + 1) for m in range(order)])
        rows.append(np.linalg.solve(V, moments))
    return np.array(rows)


def cumulative_interpolatory(y, h, order=6):
    """Running integral of uniformly spaced samples, local error O(h^(order+1)).

    Each interval is integrated with the interpolant through ``order``
    neighbouring samples (centred where possible, one-sided at the ends).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < order:
        return cumulative_trapezoid(y, dx=h, initial=0.0)
    W = _interval_weights(order)
    half = order // 2 - 1
    inc = np.empty(n - 1)
    for i in range(n - 1):
        start = min(max(i - half, 0), n - order)
        inc[i] = h * W[i - start] @ y[start:start + order]
    return np.concatenate([[0.0], np.cumsum(inc)])


def global_energy_check(traj, rule="interpolatory"):
    """Energy budget E(t) + nu int_0^t ||grad u||^2 - E(0) at every sample.

    ``rule`` picks the time quadrature for the dissipation integral:
    "interpolatory" (6-point, default), "simpson" or "trapezoid".
    """
    E, grad = energy_series(traj)
    t = traj.times
    if len(t) < 2:
        D = np.zeros_like(E)
    elif rule == "interpolatory":
        D = traj.nu * cumulative_interpolatory(grad, traj.dt_rec)
    elif rule == "simpson" and len(t) >= 3:
        D = traj.nu * cumulative_simpson(grad, x=t, initial=0.0)
    else:
        D = traj.nu * cumulative_trapezoid(grad, x=t, initial=0.0)
    return EnergyReport(t, E, D, E + D - E[0])


def energy_loss_constant(u0, eps, nu, T, dt, dt_rec, nonlinear=True):
    """C in max energy loss ~ C dt^2, from runs at dt and dt/2.

    Richardson: loss(dt) - loss(dt/2) = (3/4) C dt^2 for a second-order
    scheme.
    """
    losses = []
    for h in (dt, dt / 2):
        rep = global_energy_check(simulate(u0, eps, nu, T, h, dt_rec, nonlinear=nonlinear))
        losses.append(-rep.min_relative_deficit())
    return abs(losses[0] - losses[1]) / (0.75 * dt**2), losses
