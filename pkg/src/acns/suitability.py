"""Local energy balance of computed trajectories against smooth bumps.

For a nonnegative test function phi the artificial compressibility system
satisfies the identity

    nu (|grad u|^2, phi) = 1/2 (|u|^2, d_t phi + nu Lap phi)
                           + (1/2 |u|^2 u, grad phi) + (p u, grad phi)
                           + (p div u, phi)

(space-time integrals), and a suitable weak solution of the incompressible
equations satisfies the same relation with the last term dropped and "="
relaxed to "<=".  The terms are evaluated with trapezoid quadrature in time
over the recorded samples and exact quadrature in space: products of the
fields (trigonometric polynomials) are transformed exactly on a grid fine
enough to avoid aliasing and paired with the Fourier coefficients of the
bump, which are radial transforms evaluated by Gauss-Legendre quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import j0

from . import spectral as sp
from .errors import SupportOverflow
from .spacetime import extend_trajectory, pressure_product_bound

TERMS = ("dissipation", "ke_transport", "ke_flux", "pressure_flux", "pressure_div")
NODES = 400


def _profile(q):
    """psi(q) = exp(-1/(1-q)) on q < 1 with its first two q-derivatives."""
    q = np.asarray(q, dtype=float)
    inside = q < 1.0
    a = np.where(inside, 1.0 - q, 1.0)
    psi = np.where(inside, np.exp(-1.0 / a), 0.0)
    d1 = -psi / a**2
    d2 = psi * (1.0 / a**4 - 2.0 / a**3)
    return psi, d1, d2


@dataclass(frozen=True)
class TestFunction:
    """Bump exp(-1/(1 - rho^2)), rho^2 = |x - x0|^2/rx^2 + (t - t0)^2/rt^2.

    The value at the centre is exp(-1).  Distances in space are periodic.
    """

    center: tuple
    t0: float
    rx: float
    rt: float
    length: float = 2 * np.pi
    label: str = ""

    __test__ = False  # not a pytest class

    def time_support(self):
        return self.t0 - self.rt, self.t0 + self.rt

    def _offsets(self, coords):
        L = self.length
        return [np.mod(x - c + L / 2, L) - L / 2 for x, c in zip(coords, self.center)]

    def evaluate(self, coords, t):
        """(phi, d_t phi, grad phi, Lap phi) on spatial coordinates at time t."""
        y = self._offsets(coords)
        d = len(y)
        r2 = sum(yi**2 for yi in y) / self.rx**2
        s = (t - self.t0) / self.rt
        psi, d1, d2 = _profile(r2 + s**2)
        dt = d1 * 2 * s / self.rt
        grad = np.stack([d1 * 2 * yi / self.rx**2 for yi in y])
        lap = d2 * 4 * r2 / self.rx**2 + d1 * 2 * d / self.rx**2
        return psi, dt, grad, lap

    def transformer(self, fgrid, nodes=NODES):
        return _RadialTransform(self, fgrid, nodes)


class _RadialTransform:
    """Fourier coefficients of a bump (and of its time derivative) on the
    wavenumbers of ``fgrid``.

    The bump is radial in space and supported inside one period cell, so its
    coefficients are radial integrals against J0 (2D) or sinc (3D).
    """

    def __init__(self, bump, fgrid, nodes):
        self.bump = bump
        x, w = np.polynomial.legendre.leggauss(nodes)
        r = 0.5 * bump.rx * (x + 1.0)
        w = 0.5 * bump.rx * w
        kmag = np.sqrt(fgrid.k2)
        kk, self.inverse = np.unique(kmag.ravel(), return_inverse=True)
        d = fgrid.dim
        vol = fgrid.length**d
        if d == 2:
            self.kernel = j0(np.outer(kk, r)) * (2 * np.pi * r * w / vol)
        else:
            self.kernel = np.sinc(np.outer(kk, r) / np.pi) * (4 * np.pi * r**2 * w / vol)
        self.shape = fgrid.shape
        phase = sum(fgrid.k[j] * c for j, c in enumerate(bump.center))
        self.phase = np.exp(-1j * phase)
        self.q_space = (r / bump.rx) ** 2

    def at(self, t):
        b = self.bump
        s = (t - b.t0) / b.rt
        psi, d1, _ = _profile(self.q_space + s**2)
        rad = self.kernel @ np.stack([psi, d1 * 2 * s / b.rt], axis=1)
        ph = rad[self.inverse, 0].reshape(self.shape) * self.phase
        dt = rad[self.inverse, 1].reshape(self.shape) * self.phase
        return ph, dt


@dataclass(frozen=True)
class TestFunctionSum:
    """Sum of bumps; the local energy terms are linear in the test function."""

    parts: tuple
    label: str = "sum"

    def time_support(self):
        lo = min(p.time_support()[0] for p in self.parts)
        hi = max(p.time_support()[1] for p in self.parts)
        return lo, hi

    def evaluate(self, coords, t):
        vals = [p.evaluate(coords, t) for p in self.parts]
        return tuple(sum(v[i] for v in vals) for i in range(4))

    def transformer(self, fgrid, nodes=NODES):
        return _SumTransform([p.transformer(fgrid, nodes) for p in self.parts])


class _SumTransform:
    def __init__(self, parts):
        self.parts = parts

    def at(self, t):
        vals = [p.at(t) for p in self.parts]
        return sum(v[0] for v in vals), sum(v[1] for v in vals)


def make_bump(center, radii, grid, T, label=""):
    """Bump supported strictly inside the torus times (0, T)."""
    x0, t0 = center
    rx, rt = radii
    if len(x0) != grid.dim:
        raise ValueError("centre dimension does not match the grid")
    if not (0 < rx < grid.length / 2):
        raise SupportOverflow(f"spatial radius {rx} must lie in (0, L/2)")
    if rt <= 0 or t0 - rt <= 0 or t0 + rt >= T:
        raise SupportOverflow(f"time support ({t0 - rt}, {t0 + rt}) must lie inside (0, {T})")
    return TestFunction(tuple(float(c) for c in x0), float(t0), float(rx), float(rt), grid.length, label)


def default_bumps(grid, T):
    """Eight bumps at varied centres and radii inside the space-time box."""
    L = grid.length
    specs = [
        ((0.50, 0.50), 0.50, 0.30, 0.25),
        ((0.25, 0.25), 0.30, 0.20, 0.20),
        ((0.75, 0.25), 0.40, 0.25, 0.30),
        ((0.25, 0.75), 0.60, 0.15, 0.25),
        ((0.75, 0.75), 0.70, 0.30, 0.20),
        ((0.10, 0.60), 0.45, 0.20, 0.40),
        ((0.60, 0.05), 0.55, 0.35, 0.35),
        ((0.40, 0.90), 0.35, 0.10, 0.15),
    ]
    out = []
    for i, (c, t0, rx, rt) in enumerate(specs):
        x0 = tuple(L * np.array(c + (0.5,) * (grid.dim - 2)))
        out.append(make_bump((x0, t0 * T), (rx * L / 2, rt * T), grid, T, label=f"bump{i}"))
    return out


@dataclass
class SuitabilityReport:
    """Both sides of the local energy balance for one test function.

    ``rhs`` sums the transport terms listed in ``rhs_terms``; ``slack`` is
    rhs - lhs.  ``series`` keeps the per-sample integrands for refinement.
    """

    label: str
    lhs: float
    terms: dict
    rhs_terms: tuple
    series: dict = field(default_factory=dict, repr=False)
    times: np.ndarray = field(default=None, repr=False)

    @property
    def rhs(self):
        return float(sum(self.terms[k] for k in self.rhs_terms))

    @property
    def slack(self):
        return self.rhs - self.lhs

    def to_dict(self):
        return dict(label=self.label, lhs=self.lhs, rhs=self.rhs, slack=self.slack, terms=dict(self.terms))


def quadrature_grid(grid):
    """Grid on which cubic products of the fields are free of aliasing."""
    return sp.TorusGrid(grid.dim, 3 * grid.n + 2, grid.length)


def local_term_series(traj, phi, nu=None, chunk=16, nodes=NODES):
    """Per-sample spatial integrals of every local energy term.

    Returns (sample indices, dict of arrays).  Samples outside the time
    support of phi contribute zero and are skipped.  ``pressure_sq`` holds
    1/2 (p^2, d_t phi), used by the substitution check.
    """
    g = traj.grid
    nu = traj.nu if nu is None else nu
    fg = quadrature_grid(g)
    m = fg.n
    tr = phi.transformer(fg, nodes)
    lo, hi = phi.time_support()
    t = traj.times
    idx = np.flatnonzero((t > lo) & (t < hi))
    names = TERMS + ("pressure_sq",)
    out = {k: np.zeros(len(idx)) for k in names}
    d = g.dim
    vol = fg.volume
    pair = lambda a, b: vol * np.real(np.sum(a * np.conj(b), axis=tuple(range(-d, 0))))
    for a in range(0, len(idx), chunk):
        sel = idx[a:a + chunk]
        uh = traj.u[sel]
        grads = [1j * g.k[j] * uh for j in range(d)]
        stacked = np.concatenate([uh] + grads + [traj.p[sel][:, np.newaxis]], axis=1)
        phys = sp.inv_padded(g, stacked, m)
        u = phys[:, :d]
        p = phys[:, -1]
        du = phys[:, d:-1]  # d_j u_i at index j*d + i
        div = sum(du[:, j * d + j] for j in range(d))
        ke = 0.5 * np.sum(u**2, axis=1)
        prods = np.concatenate(
            [np.sum(du**2, axis=1)[:, None], ke[:, None], ke[:, None] * u, p[:, None] * u,
             (p * div)[:, None], (0.5 * p * p)[:, None]],
            axis=1,
        )
        P = sp.fwd(fg, prods)
        for r, i in enumerate(sel):
            ph, dt = tr.at(t[i])
            grad = [1j * fg.k[j] * ph for j in range(d)]
            row = a + r
            c = P[r]
            out["dissipation"][row] = nu * pair(c[0], ph)
            out["ke_transport"][row] = pair(c[1], dt - nu * fg.k2 * ph)
            out["ke_flux"][row] = sum(pair(c[2 + j], grad[j]) for j in range(d))
            out["pressure_flux"][row] = sum(pair(c[2 + d + j], grad[j]) for j in range(d))
            out["pressure_div"][row] = pair(c[2 + 2 * d], ph)
            out["pressure_sq"][row] = pair(c[3 + 2 * d], dt)
    return idx, out


def integrate_series(idx, series, times, stride=1):
    keep = idx % stride == 0
    if np.count_nonzero(keep) < 2:
        return {k: 0.0 for k in series}
    tt = times[idx[keep]]
    # zero integrand at the neighbouring samples outside the support
    h = stride * (times[1] - times[0])
    tt = np.concatenate([[tt[0] - h], tt, [tt[-1] + h]])
    return {k: float(trapezoid(np.concatenate([[0.0], v[keep], [0.0]]), tt)) for k, v in series.items()}


def report_from_series(label, idx, series, times, rhs_terms, stride=1):
    tot = integrate_series(idx, {k: series[k] for k in TERMS}, times, stride)
    lhs = tot.pop("dissipation")
    return SuitabilityReport(label, lhs, tot, rhs_terms, series, times[idx])


def local_energy_residual(traj, phi, nu=None, nodes=NODES):
    """Generalized energy inequality at phi: slack = rhs - lhs (>= 0 if suitable)."""
    idx, series = local_term_series(traj, phi, nu, nodes=nodes)
    return report_from_series(getattr(phi, "label", ""), idx, series, traj.times, TERMS[1:4])


def ac_local_energy_identity(traj, phi, nu=None, stride=1, nodes=NODES):
    """Local energy identity of the compressible system; slack is its residual."""
    idx, series = local_term_series(traj, phi, nu, nodes=nodes)
    return report_from_series(getattr(phi, "label", ""), idx, series, traj.times, TERMS[1:], stride)


@dataclass
class IdentityCheck:
    residual: float  # at the recorded spacing h
    residual_coarse: float  # every other sample (spacing 2h)
    extrapolated: float

    @property
    def tol(self):
        """3x the larger of the raw and extrapolated identity residuals."""
        return 3.0 * max(abs(self.residual), abs(self.extrapolated))


def identity_tolerance(traj, phi, nu=None, series=None):
    """Residual of the local identity at spacing h and 2h, plus the
    Richardson extrapolation R(h) + (R(h) - R(2h))/3."""
    idx, ser = series if series is not None else local_term_series(traj, phi, nu)
    fine = report_from_series("", idx, ser, traj.times, TERMS[1:], 1)
    coarse = report_from_series("", idx, ser, traj.times, TERMS[1:], 2)
    r1, r2 = fine.slack, coarse.slack
    return IdentityCheck(r1, r2, r1 + (r1 - r2) / 3.0)


@dataclass
class VanishingTerm:
    value: float
    substituted: float  # eps/2 (p^2, d_t phi), from eps d_t p = -div u
    bound: float

    @property
    def within_bound(self):
        return abs(self.value) <= self.bound


def vanishing_term_check(traj, phi, eps=None, ext=None):
    """(p div u, phi), its substituted form and the product bound."""
    eps = traj.eps if eps is None else eps
    idx, series = local_term_series(traj, phi)
    tot = integrate_series(idx, {k: series[k] for k in ("pressure_div", "pressure_sq")}, traj.times)
    ext = extend_trajectory(traj) if ext is None else ext
    return VanishingTerm(tot["pressure_div"], eps * tot["pressure_sq"], pressure_product_bound(ext, eps))


@dataclass
class SweepVerdict:
    eps: float
    rows: list  # one dict per bump
    passed: bool

    def to_dict(self):
        return dict(eps=self.eps, passed=self.passed, rows=self.rows)


def suitability_sweep(family, bumps, reference=None, term_rtol=0.02):
    """Check the energy inequality for the smallest eps and compare every
    local term with the incompressible reference run.

    ``family`` maps eps to trajectories.  A bump passes when the
    incompressible slack is >= -tol (tol from identity_tolerance) and, when
    a reference is given, each transport term lies within ``term_rtol`` of
    its reference value relative to the reference dissipation.
    """
    if not family:
        return SweepVerdict(float("nan"), [], True)
    eps = min(family)
    traj = family[eps]
    rows = []
    ok = True
    for phi in bumps:
        ser = local_term_series(traj, phi)
        ns = report_from_series(phi.label, *ser, traj.times, TERMS[1:4])
        chk = identity_tolerance(traj, phi, series=ser)
        row = dict(label=phi.label, lhs=ns.lhs, rhs=ns.rhs, slack=ns.slack, tol=chk.tol,
                   identity_residual=chk.residual, terms=dict(ns.terms))
        row["suitable"] = bool(ns.slack >= -chk.tol)
        if reference is not None:
            ref = local_energy_residual(reference, phi)
            scale = max(abs(ref.lhs), np.finfo(float).tiny)
            diffs = {"dissipation": abs(ns.lhs - ref.lhs) / scale}
            for k in TERMS[1:4]:
                diffs[k] = abs(ns.terms[k] - ref.terms[k]) / scale
            row["term_rel_diff"] = diffs
            row["terms_match"] = bool(max(diffs.values()) <= term_rtol)
            row["suitable"] = row["suitable"] and row["terms_match"]
        ok = ok and row["suitable"]
        rows.append(row)
    return SweepVerdict(eps, rows, ok)
