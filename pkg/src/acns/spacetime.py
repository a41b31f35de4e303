"""Space-time norms of trajectories and the uniform-bound monitor suites.

A trajectory on [0, T] is extended to the window [-1, T + 1]: a linear ramp
(t + 1) u0 before t = 0, the recorded data on [0, T] (held at its last value
if the run stops there), all multiplied by a C-infinity plateau phi that is 1
on [0, T] and vanishes outside (-1, T + 1).  Fractional time regularity is
then measured with the time Fourier transform of the windowed samples,

    v~(k) = int v(t) exp(-2 pi i k t) dt,  k = j / (T + 2),

approximated by the trapezoid rule (exact periodic DFT).  The resulting
norms are upper bounds for the quotient norms on (0, T).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import trapezoid

from . import spectral as sp
from .errors import NegativePowerOfMeanMode, RelationViolated
from .solver import nonlinear_hat, nonlinear_parts

MARGIN = 0.01


# ---------------------------------------------------------------- plateau


def _g(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _dg(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, with its derivative."""
    a, b = _g(x), _g(1.0 - np.asarray(x, dtype=float))
    s = a / (a + b)
    ds = (_dg(x) * b + a * _dg(1.0 - np.asarray(x, dtype=float))) / (a + b) ** 2
    return s, ds


def plateau(t, T):
    """phi(t) and phi'(t): 1 on [0, T], support in (-1, T + 1)."""
    t = np.asarray(t, dtype=float)
    up, dup = smooth_step(t + 1.0)
    down, ddown = smooth_step(T + 1.0 - t)
    phi = np.where(t < 0, up, np.where(t > T, down, 1.0))
    dphi = np.where(t < 0, dup, np.where(t > T, -ddown, 0.0))
    return phi, dphi


# ---------------------------------------------------------------- windowed data


@dataclass(eq=False)
class WindowedField:
    """Uniform periodic samples over [t_start, t_start + h * len) of a field."""

    grid: sp.TorusGrid
    h: float
    t_start: float
    samples: np.ndarray  # (M, components, *space) coefficients

    @property
    def times(self):
        return self.t_start + self.h * np.arange(self.samples.shape[0])

    @property
    def length(self):
        return self.h * self.samples.shape[0]


RAMP, DATA, HOLD = -1, 0, 1


@dataclass(eq=False)
class ExtendedTrajectory:
    """Trajectory extended to [-1, T + 1] before the plateau is applied.

    ``bar_u``/``bar_p`` hold the un-windowed extension; ``u``/``p`` return
    phi times them.  ``region`` marks ramp (-1), recorded data (0) and
    held-constant samples (1).
    """

    base: object
    T: float
    h: float
    times: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    region: np.ndarray
    bar_u: np.ndarray
    bar_p: np.ndarray
    u0: np.ndarray
    p0: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self):
        return self.base.grid

    @property
    def eps(self):
        return self.base.eps

    @property
    def window(self):
        return (-1.0, self.T + 1.0)

    def _phi(self, ndim_extra):
        return self.phi.reshape((-1,) + (1,) * ndim_extra)

    def windowed(self, bar, weight=None):
        w = self.phi if weight is None else weight
        return WindowedField(self.grid, self.h, -1.0, _scale(w, bar))

    def velocity(self):
        return self.windowed(self.bar_u)

    def pressure(self):
        return self.windowed(self.bar_p[:, np.newaxis])

    @property
    def u(self):
        return self.velocity().samples

    @property
    def p(self):
        return self.pressure().samples[:, 0]

    def nonlinear_bar(self):
        """N(u-bar) at every window sample (dealiased coefficients)."""
        if "N" not in self._cache:
            self._cache["N"] = nonlinear_hat(self.grid, self.bar_u)
        return self._cache["N"]


def _steps(x, h, what):
    r = x / h
    if abs(r - round(r)) > 1e-9 * max(1.0, abs(r)):
        raise ValueError(f"{what}={x} is not a multiple of the sample spacing {h}")
    return int(round(r))


def extend_trajectory(traj, u0=None, p0=None, horizon=None):
    """Build the windowed extension of ``traj`` over [-1, horizon + 1].

    ``u0``/``p0`` default to the first recorded sample; ``horizon`` defaults
    to the end of the run.  Data past the horizon are used when recorded,
    otherwise the last sample is held.
    """
    if abs(traj.t0) > 1e-12:
        raise ValueError("trajectory must start at t = 0")
    h = traj.dt_rec
    T = traj.T if horizon is None else float(horizon)
    if T > traj.T + 1e-12:
        raise ValueError("horizon lies beyond the recorded run")
    n_ramp = _steps(1.0, h, "ramp length")
    n_T = _steps(T, h, "horizon")
    M = n_ramp + n_T + n_ramp
    j = np.arange(M)
    t = -1.0 + h * j
    u0 = traj.u[0] if u0 is None else np.asarray(getattr(u0, "coeffs", u0))
    p0 = traj.p[0] if p0 is None else np.asarray(getattr(p0, "coeffs", p0)).reshape(traj.grid.shape)
    idx = j - n_ramp
    region = np.where(idx < 0, RAMP, np.where(idx < len(traj), DATA, HOLD))
    src = np.clip(idx, 0, len(traj) - 1)
    bar_u = traj.u[src].copy()
    bar_p = traj.p[src].copy()
    ramp = idx < 0
    s = (t[ramp] + 1.0)
    bar_u[ramp] = _outer(s, u0)
    bar_p[ramp] = _outer(s, p0)
    phi, dphi = plateau(t, T)
    return ExtendedTrajectory(traj, T, h, t, phi, dphi, region, bar_u, bar_p, u0, p0)


def _outer(s, a):
    """Stack of s[j] * a for a single field a."""
    return s.reshape((-1,) + (1,) * a.ndim) * a[np.newaxis]


def _scale(w, a):
    """Row-wise product w[j] * a[j] for a stack of fields a."""
    return w.reshape((-1,) + (1,) * (a.ndim - 1)) * a


# ---------------------------------------------------------------- time transform


@dataclass(eq=False)
class ModalTrajectory:
    grid: sp.TorusGrid
    freqs: np.ndarray  # cycles per unit time
    coeffs: np.ndarray  # (M, components, *space)
    dk: float


def time_dft(wf):
    """Trapezoid-rule time Fourier transform of windowed samples."""
    if isinstance(wf, ExtendedTrajectory):
        wf = wf.velocity()
    M = wf.samples.shape[0]
    freqs = np.fft.fftfreq(M, d=wf.h)
    phase = np.exp(-2j * np.pi * freqs * wf.t_start)
    c = np.fft.fft(wf.samples, axis=0) * wf.h
    c *= phase.reshape((-1,) + (1,) * (c.ndim - 1))
    return ModalTrajectory(wf.grid, freqs, c, 1.0 / wf.length)


@dataclass(frozen=True)
class NormSpec:
    """H^gamma in time with values in H^s in space.

    Time weight (1 + |k|)^{2 gamma}, or |k|^{2 gamma} when ``homog_time``;
    space weight (1 + |m|^2)^s or |m|^{2s} when ``homog_space``.
    """

    gamma: float
    s: float
    homog_time: bool = False
    homog_space: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and np.isfinite(self.s)):
            raise ValueError("norm indices must be finite")

    def describe(self):
        t = "Hdot" if self.homog_time else "H"
        x = "Hdot" if self.homog_space else "H"
        return f"{t}^{self.gamma:.6g}({x}^{self.s:.6g})"


def time_weight(freqs, gamma, homogeneous):
    a = np.abs(freqs)
    if not homogeneous:
        return (1.0 + a) ** (2 * gamma)
    if gamma == 0:
        return np.ones_like(a)
    safe = np.where(a > 0, a, 1.0)
    return np.where(a > 0, safe ** (2 * gamma), 0.0)


def _modal(obj):
    if isinstance(obj, ModalTrajectory):
        return obj
    return time_dft(obj)


def spacetime_norm(obj, spec):
    """(sum_k dk w(k) ||v~(k)||^2_{H^s})^{1/2} over the discrete frequencies."""
    m = _modal(obj)
    space = sp.sobolev_sq(m.grid, m.coeffs, spec.s, spec.homog_space)
    w = time_weight(m.freqs, spec.gamma, spec.homog_time)
    if spec.homog_time and spec.gamma < 0:
        zero = m.freqs == 0
        if np.any(space[zero] > 1e-28 * max(np.sum(space), 1e-300)):
            raise NegativePowerOfMeanMode("negative homogeneous time index needs zero time mean")
    return float(np.sqrt(m.dk * np.sum(w * space)))


def drop_mean(wf):
    """Copy of windowed samples with the spatial mean mode removed."""
    c = wf.samples.copy()
    c[(Ellipsis,) + (0,) * wf.grid.dim] = 0.0
    return WindowedField(wf.grid, wf.h, wf.t_start, c)


def time_derivative(m):
    """Modal transform of d/dt: multiply by 2 pi i k."""
    f = 2j * np.pi * m.freqs
    return ModalTrajectory(m.grid, m.freqs, f.reshape((-1,) + (1,) * (m.coeffs.ndim - 1)) * m.coeffs, m.dk)


# ---------------------------------------------------------------- exponents


def exponent_relations(p, q):
    """(s, r-bar) from 2/p + 3/q = 4, s/3 = 1/q - 1/2, r-bar = 1/p - 1/2.

    Fractions in give Fractions out (exact arithmetic).
    """
    exact = all(isinstance(v, (int, Fraction)) for v in (p, q))
    if exact:
        p, q = Fraction(p), Fraction(q)
        ok = 2 / p + 3 / q == 4
        one, half = Fraction(1), Fraction(1, 2)
    else:
        p, q = float(p), float(q)
        ok = abs(2 / p + 3 / q - 4) <= 1e-12
        one, half = 1.0, 0.5
    if not ok:
        raise RelationViolated(f"2/p + 3/q = {2 / p + 3 / q} != 4 for (p, q) = ({p}, {q})")
    if not (1 <= p <= 2 and 1 <= q <= Fraction(3, 2)):
        raise RelationViolated(f"(p, q) = ({p}, {q}) outside [1, 2] x [1, 3/2]")
    return 3 * (one / q - half), one / p - half


def exponents_for_space_index(s):
    """(p, q, r-bar) compatible with a given space index s in [1/2, 3/2]."""
    exact = isinstance(s, (int, Fraction))
    s = Fraction(s) if exact else float(s)
    q = 1 / (s / 3 + Fraction(1, 2) if exact else s / 3 + 0.5)
    p = 1 / (Fraction(5, 4) - s / 2 if exact else 1.25 - s / 2)
    s_back, rbar = exponent_relations(p, q)
    return p, q, rbar


# ---------------------------------------------------------------- monitors


@dataclass
class MonitorReport:
    label: str
    eps: float
    value: float
    spec: str
    indices: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError(f"monitor {self.label} produced {self.value}")


def _nonlinear_windowed(ext):
    N = ext.nonlinear_bar()
    return ext.windowed(N, ext.phi**2)


def nonlinear_term_norm(ext, p=Fraction(4, 3), q=Fraction(6, 5), margin=MARGIN):
    """||(u.grad)u + 1/2 (div u) u||_{H^{-r}(Hdot^{-s})} of the extended velocity."""
    s, rbar = exponent_relations(p, q)
    r = float(rbar) + margin
    spec = NormSpec(-r, -float(s), homog_space=True)
    v = spacetime_norm(drop_mean(_nonlinear_windowed(ext)), spec)
    return MonitorReport("nonlinear_term", ext.eps, v, spec.describe(), {"p": float(p), "q": float(q), "r": r, "s": float(s)})


def extension_forcing(ext):
    """Forcing of the extended momentum equation, assembled piecewise.

    Ramp interval: (1+t) phi' u0 + phi u0 - (1+t) phi N(u0); elsewhere
    -phi N(u-bar) + phi' u-bar.
    """
    N = ext.nonlinear_bar()
    t = ext.times
    phi, dphi = ext.phi, ext.dphi
    f = _scale(-phi, N) + _scale(dphi, ext.bar_u)
    ramp = ext.region == RAMP
    if np.any(ramp):
        N0 = nonlinear_hat(ext.grid, ext.u0)
        tr = t[ramp]
        f[ramp] = _outer((1 + tr) * dphi[ramp] + phi[ramp], ext.u0) - _outer((1 + tr) * phi[ramp], N0)
    return WindowedField(ext.grid, ext.h, -1.0, f)


def forcing_term_norm(ext, u0=None, p=Fraction(4, 3), q=Fraction(6, 5), margin=MARGIN):
    if u0 is not None:
        ext.u0 = np.asarray(getattr(u0, "coeffs", u0))
    s, rbar = exponent_relations(p, q)
    r = float(rbar) + margin
    spec = NormSpec(-r, -float(s), homog_space=True)
    v = spacetime_norm(drop_mean(extension_forcing(ext)), spec)
    return MonitorReport("forcing_term", ext.eps, v, spec.describe(), {"p": float(p), "q": float(q), "r": r, "s": float(s)})


def velocity_indices(s=0.5, alpha=0.3, margin=MARGIN):
    _, _, rbar = exponents_for_space_index(s)
    rbar = float(rbar)
    tau_statement = 0.4 * (1 + alpha)
    tau_proof = (1 + alpha) * (1 - rbar) / (1 + s)
    return dict(s=s, alpha=alpha, rbar=rbar, r=rbar + margin, tau_statement=tau_statement - margin, tau_proof=tau_proof - margin)


def velocity_estimate_suite(ext, eps=None, s=0.5, alpha=0.3, margin=MARGIN):
    """Time derivative, Laplacian and fractional-in-time velocity norms.

    The last norm is evaluated at both admissible time indices (the stated
    2/5 (1 + alpha) and the one derived in the proof), each less ``margin``.
    """
    eps = ext.eps if eps is None else eps
    ix = velocity_indices(s, alpha, margin)
    m = time_dft(drop_mean(ext.velocity()))
    dt_spec = NormSpec(-ix["r"], -s, homog_space=True)
    out = [
        MonitorReport("dt_u", eps, spacetime_norm(time_derivative(m), dt_spec), dt_spec.describe(), dict(ix)),
    ]
    lap = ModalTrajectory(m.grid, m.freqs, -m.grid.k2 * m.coeffs, m.dk)
    out.append(MonitorReport("lap_u", eps, spacetime_norm(lap, dt_spec), dt_spec.describe(), dict(ix)))
    for key in ("tau_statement", "tau_proof"):
        spec = NormSpec(ix[key], -alpha, homog_space=True)
        out.append(MonitorReport(f"u_{key}", eps, spacetime_norm(m, spec), spec.describe(), dict(ix)))
    return out


def pressure_indices(s=0.5, delta=1 / 24, beta=None, margin=MARGIN):
    beta = (1 - 12 * delta) / 20 if beta is None else beta
    _, _, rbar = exponents_for_space_index(s)
    return dict(s=s, delta=delta, beta=beta, rbar=float(rbar), r=float(rbar) + margin)


def pressure_estimate_suite(ext, eps=None, s=0.5, delta=1 / 24, beta=None, margin=MARGIN):
    eps = ext.eps if eps is None else eps
    ix = pressure_indices(s, delta, beta, margin)
    m = time_dft(ext.pressure())
    spec1 = NormSpec(-ix["r"], 1 - s, homog_space=True)
    spec2 = NormSpec(0.5 + ix["beta"] / 4, -0.5 + delta, homog_time=True)
    return [
        MonitorReport("p", eps, spacetime_norm(m, spec1), spec1.describe(), dict(ix)),
        MonitorReport("sqrt_eps_p", eps, np.sqrt(eps) * spacetime_norm(m, spec2), spec2.describe(), dict(ix)),
    ]


def pressure_product_bound(ext, eps=None, delta=1 / 24, beta=None):
    """sqrt(eps) ||sqrt(eps) p||_{Hdot^{1/2+beta/2}(H^{-1/2+delta})} ||p||_{H^{-1/2-beta}(Hdot^{1/2-delta})}."""
    eps = ext.eps if eps is None else eps
    beta = (1 - 12 * delta) / 20 if beta is None else beta
    m = time_dft(ext.pressure())
    a = np.sqrt(eps) * spacetime_norm(m, NormSpec(0.5 + beta / 2, -0.5 + delta, homog_time=True))
    b = spacetime_norm(m, NormSpec(-0.5 - beta, 0.5 - delta, homog_space=True))
    return float(np.sqrt(eps) * a * b)


# ---------------------------------------------------------------- modal identity


def consistent_sources(ext, nu, nonlinear=True):
    """Right-hand sides (f, g) that make the extended fields satisfy

        dU/dt - nu Lap U + grad P = f,   eps dP/dt + div U = g

    exactly, given that the recorded samples solve the system on the data
    interval and the extension is a ramp / held constant elsewhere.  The
    sources jump where the time derivative of the extension does (t = 0 and
    the start of the hold); the sample sitting on a jump takes the mean of
    the one-sided limits, which keeps the trapezoid transform second order.
    """
    g_ = ext.grid
    eps = ext.eps
    phi, dphi, t = ext.phi, ext.dphi, ext.times

    def data(ix):
        u, p = ext.bar_u[ix], ext.bar_p[ix]
        N = nonlinear_hat(g_, u) if nonlinear else np.zeros_like(u)
        return _scale(dphi[ix], u) - _scale(phi[ix], N), eps * _scale(dphi[ix], p)

    def hold(ix):
        u, p = ext.bar_u[ix], ext.bar_p[ix]
        lin = nu * g_.k2 * u + 1j * g_.k * p[:, np.newaxis]  # -nu Lap u + grad p
        div = np.sum(1j * g_.k * u, axis=1)
        f = _scale(dphi[ix], u) + _scale(phi[ix], lin)
        return f, eps * _scale(dphi[ix], p) + _scale(phi[ix], div)

    def ramp(ix):
        s = t[ix] + 1
        u0, p0 = ext.u0, ext.p0
        lin0 = nu * g_.k2 * u0 + 1j * g_.k * p0
        div0 = np.sum(1j * g_.k * u0, axis=0)
        f = _outer(dphi[ix] * s + phi[ix], u0) + _outer(phi[ix] * s, lin0)
        return f, _outer(eps * (dphi[ix] * s + phi[ix]), p0) + _outer(phi[ix] * s, div0)

    f = np.empty_like(ext.bar_u)
    g = np.empty_like(ext.bar_p)
    rules = {RAMP: ramp, DATA: data, HOLD: hold}
    for code, rule in rules.items():
        ix = np.flatnonzero(ext.region == code)
        for a in range(0, len(ix), 256):
            chunk = ix[a:a + 256]
            f[chunk], g[chunk] = rule(chunk)
    # jump samples: first data sample (ramp on the left) and last data sample
    # when a hold follows
    jumps = []
    d = np.flatnonzero(ext.region == DATA)
    if len(d) and d[0] > 0 and ext.region[d[0] - 1] == RAMP:
        jumps.append((d[0], ramp))
    if len(d) and d[-1] + 1 < len(t) and ext.region[d[-1] + 1] == HOLD:
        jumps.append((d[-1], hold))
    for i, other in jumps:
        ix = np.array([i])
        fo, go = other(ix)
        f[i] = 0.5 * (f[i] + fo[0])
        g[i] = 0.5 * (g[i] + go[0])
    return WindowedField(g_, ext.h, -1.0, f), WindowedField(g_, ext.h, -1.0, g[:, np.newaxis])


def _one_sided(ext, code, i, nu, nonlinear):
    """(u', p', u'', p'') of the un-windowed extension at sample i, taken
    from the side governed by ``code``."""
    g_ = ext.grid
    u, p = ext.bar_u[i], ext.bar_p[i]
    zu, zp = np.zeros_like(u), np.zeros_like(p)
    if code == HOLD:
        return zu, zp, zu, zp
    if code == RAMP:
        return ext.u0, ext.p0, zu, zp
    eps = ext.eps
    lin = lambda a, b: nu * g_.k2 * a + 1j * g_.k * b
    div = lambda a: np.sum(1j * g_.k * a, axis=0)
    N = (lambda a: nonlinear_hat(g_, a)) if nonlinear else (lambda a: zu)
    u1 = -lin(u, p) - N(u)
    p1 = -div(u) / eps
    dN = 0.5 * (N(u + u1) - N(u - u1))  # N is quadratic: exact polarization
    return u1, p1, -lin(u1, p1) - dN, -div(u1) / eps


def _breakpoints(ext):
    d = np.flatnonzero(ext.region == DATA)
    out = []
    if len(d) and d[0] > 0 and ext.region[d[0] - 1] == RAMP:
        out.append((d[0], RAMP, DATA))
    if len(d) and d[-1] + 1 < len(ext.times) and ext.region[d[-1] + 1] == HOLD:
        out.append((d[-1], DATA, HOLD))
    return out


def jump_corrections(ext, nu, nonlinear, freqs):
    """Euler-Maclaurin corrections for the trapezoid transforms of U, P, f, g.

    At a breakpoint t_b where a windowed quantity v has jumps [v], [v'] the
    trapezoid rule (with the mean value at t_b) errs by
    -(h^2/12)([v'] - 2 pi i k [v]) exp(-2 pi i k t_b) + O(h^4).
    """
    g_ = ext.grid
    eps, h = ext.eps, ext.h
    out = [np.zeros((len(freqs),) + a.shape, dtype=complex) for a in (ext.u0, ext.p0, ext.u0, ext.p0)]
    for i, left, right in _breakpoints(ext):
        L = _one_sided(ext, left, i, nu, nonlinear)
        R = _one_sided(ext, right, i, nu, nonlinear)
        ju1, jp1, ju2, jp2 = (r - l for r, l in zip(R, L))
        phi, dphi = ext.phi[i], ext.dphi[i]
        lin = nu * g_.k2 * ju1 + 1j * g_.k * jp1
        divj = np.sum(1j * g_.k * ju1, axis=0)
        # (value jump, derivative jump) of U, P, f, g after windowing
        pairs = [
            (0.0 * ju1, phi * ju1),
            (0.0 * jp1, phi * jp1),
            (phi * ju1, 2 * dphi * ju1 + phi * (ju2 + lin)),
            (eps * phi * jp1, 2 * eps * dphi * jp1 + phi * (eps * jp2 + divj)),
        ]
        ik = 2j * np.pi * freqs
        e = np.exp(-ik * ext.times[i]) * h**2 / 12.0
        for acc, (jv, jd) in zip(out, pairs):
            acc += _outer(e, jd) - _outer(e * ik, jv)
    return out


def modal_residual_check(ext, eps=None, nu=None, band=4.0, nonlinear=None):
    """Relative residual of the time-Fourier-transformed system

        2 pi i k U~ - Lap U~ + grad P~ = f~,  eps 2 pi i k P~ + div U~ = g~

    in the discrete L^2(|k| <= band; H^{-1}) norm.  Transforms are trapezoid
    sums with endpoint corrections at the derivative jumps of the extension.
    """
    eps = ext.eps if eps is None else eps
    nu = ext.base.nu if nu is None else nu
    if nonlinear is None:
        nonlinear = ext.base.meta.get("nonlinear", True)
    grid = ext.grid
    f, g = consistent_sources(ext, nu, nonlinear)
    U, P = time_dft(ext.velocity()), time_dft(ext.pressure())
    F, G = time_dft(f), time_dft(g)
    sel = np.abs(U.freqs) <= band
    cu, cp, cf, cg = jump_corrections(ext, nu, nonlinear, U.freqs[sel])
    ik = (2j * np.pi * U.freqs[sel]).reshape((-1, 1) + (1,) * grid.dim)
    Uc = U.coeffs[sel] + cu
    Pc = P.coeffs[sel][:, 0] + cp
    Fc = F.coeffs[sel] + cf
    Gc = G.coeffs[sel][:, 0] + cg
    dU = ik * Uc
    dP = eps * ik[:, 0] * Pc
    r1 = dU + nu * grid.k2 * Uc + 1j * grid.k * Pc[:, np.newaxis] - Fc
    r2 = dP + np.sum(1j * grid.k * Uc, axis=1) - Gc
    h1 = lambda c: np.sum(sp.sobolev_sq(grid, c, -1, False))
    num = h1(r1) + h1(r2[:, np.newaxis])
    den = h1(dU) + h1(dP[:, np.newaxis])
    if den == 0:
        return 0.0
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------- energy-level bounds


def lp_series(grid, coeffs, p):
    """Spatial L^p norm of every sample of a (S, components, *space) array."""
    phys = sp.inv(grid, coeffs)
    mag = np.abs(phys[:, 0]) if phys.shape[1] == 1 else np.sqrt(np.sum(phys**2, axis=1))
    red = tuple(range(1, mag.ndim))
    if np.isinf(p):
        return np.max(mag, axis=red)
    return (np.sum(mag**p, axis=red) * grid.dx**grid.dim) ** (1.0 / p)


def lp_time(values, dt, p):
    """L^p over the recorded time interval (trapezoid rule), L^inf as max."""
    values = np.asarray(values, dtype=float)
    if np.isinf(p):
        return float(np.max(values))
    if len(values) < 2:
        return 0.0
    return float(trapezoid(values**p, dx=dt) ** (1.0 / p))


def spacetime_hm1(wf):
    """H^{-1} norm on window x torus with weight (1 + (2 pi k)^2 + |m|^2)^{-1}."""
    m = time_dft(wf)
    grid = m.grid
    w = 1.0 / (1.0 + (2 * np.pi * m.freqs.reshape((-1,) + (1,) * grid.dim)) ** 2 + grid.k2)
    return float(np.sqrt(m.dk * grid.volume * np.sum(w[:, np.newaxis] * np.abs(m.coeffs) ** 2)))


def lemma31_suite(traj, eps=None, ext=None):
    eps = traj.eps if eps is None else eps
    g = traj.grid
    dt = traj.dt_rec
    ext = extend_trajectory(traj) if ext is None else ext
    out = []

    def add(label, value, spec):
        out.append(MonitorReport(label, eps, value, spec))

    p = traj.p[:, np.newaxis]
    add("sqrt_eps_p_LinfL2", np.sqrt(eps) * lp_time(lp_series(g, p, 2), dt, np.inf), "Linf(L2)")
    div = np.sum(1j * g.k * ext.bar_u, axis=1)[:, np.newaxis]
    add("eps_dtp_Hm1", spacetime_hm1(ext.windowed(div)), "H^-1(window x torus) of div u")
    grad = np.sqrt(sp.sobolev_sq(g, traj.u, 1, True))
    add("grad_u_L2L2", lp_time(grad, dt, 2), "L2(L2)")
    add("u_LinfL2", lp_time(lp_series(g, traj.u, 2), dt, np.inf), "Linf(L2)")
    add("u_L2L6", lp_time(lp_series(g, traj.u, 6), dt, 2), "L2(L6)")
    adv, stab = nonlinear_parts(g, traj.u)
    for name, arr in (("adv", adv), ("divu_u", stab)):
        mag = np.sqrt(np.sum(arr**2, axis=1))
        dv = g.dx**g.dim
        red = tuple(range(1, mag.ndim))
        l1 = np.sum(mag, axis=red) * dv
        l32 = (np.sum(mag**1.5, axis=red) * dv) ** (2 / 3)
        add(f"{name}_L2L1", lp_time(l1, dt, 2), "L2(L1)")
        add(f"{name}_L1L3/2", lp_time(l32, dt, 1), "L1(L3/2)")
    bessel = lambda c, m: (1.0 + g.k2) ** (-m / 2.0) * c
    add("eps38_p_L4Wm24", eps**0.375 * lp_time(lp_series(g, bessel(p, 2), 4), dt, 4), "L4(W^-2,4)")
    dtp = np.gradient(traj.p, dt, axis=0, edge_order=2)[:, np.newaxis] if len(traj) > 2 else np.zeros_like(p)
    add("eps78_dtp_L4Wm34", eps**0.875 * lp_time(lp_series(g, bessel(dtp, 3), 4), dt, 4), "L4(W^-3,4)")
    return out
