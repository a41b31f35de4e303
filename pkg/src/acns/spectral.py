"""Fourier machinery on the periodic torus.

Fields are stored as Fourier-series coefficients, ``f(x) = sum_k fhat_k e^{i k.x}``,
using the full (not half) FFT layout so that per-mode formulas stay as simple as
in the continuum.  A coefficient array has shape ``(components, n, ..., n)``; every
helper here also accepts extra leading axes (time samples, say) in front of
that, and operates on the trailing ``dim`` axes only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import NegativePowerOfMeanMode

MEAN_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Uniform collocation grid on the torus [0, L)^dim.

    The integer lattice is made symmetric under k -> -k by assigning the
    Nyquist index wavenumber zero.  Nyquist modes are always dealiased, so
    the convention only matters for raw user input.
    """

    dim: int
    n: int
    length: float = 2 * np.pi
    k: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError("length must be positive")
        ints = np.fft.fftfreq(self.n, d=1.0 / self.n)
        ints[self.n // 2] = 0.0
        scale = 2 * np.pi / self.length
        axes = np.meshgrid(*([ints] * self.dim), indexing="ij")
        k = np.stack([a * scale for a in axes])
        raw = np.meshgrid(*([np.fft.fftfreq(self.n, d=1.0 / self.n)] * self.dim), indexing="ij")
        mask = np.ones(self.shape, dtype=bool)
        for a in raw:
            mask &= np.abs(a) <= self.n / 3
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k2", np.sum(k * k, axis=0))
        object.__setattr__(self, "dealias_mask", mask)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    @property
    def dx(self):
        return self.length / self.n

    @property
    def volume(self):
        return self.length**self.dim

    @property
    def kmag(self):
        return np.sqrt(self.k2)

    def coordinates(self, n=None):
        """Meshgrid of physical coordinates, shape ``(dim, n, ..., n)``."""
        n = self.n if n is None else n
        x = np.arange(n) * (self.length / n)
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def to_dict(self):
        return {"dim": self.dim, "n": self.n, "L": self.length}

    def same_as(self, other):
        return (self.dim, self.n, self.length) == (other.dim, other.n, other.length)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == self.grid.dim:
            c = c[np.newaxis]
        if c.shape[1:] != self.grid.shape or c.shape[0] not in (1, self.grid.dim):
            raise ValueError(f"coefficient shape {c.shape} does not fit grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    @property
    def is_scalar(self):
        return self.ncomp == 1

    def _like(self, coeffs):
        return SpectralField(self.grid, coeffs)

    def __add__(self, other):
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, a):
        return self._like(self.coeffs * a)

    __rmul__ = __mul__

    def component(self, i):
        return self._like(self.coeffs[i : i + 1])

    def physical(self):
        return transform_to_physical(self)

    @classmethod
    def zeros(cls, grid, components=1):
        return cls(grid, np.zeros((components,) + grid.shape, dtype=complex))


def vector(grid, *comps):
    """Stack scalar fields or coefficient arrays into a vector field."""
    arrs = [c.coeffs[0] if isinstance(c, SpectralField) else np.asarray(c) for c in comps]
    return SpectralField(grid, np.stack(arrs))


# ---------------------------------------------------------------- transforms


def fwd(grid, samples):
    """Physical samples -> coefficients, over the trailing ``dim`` axes."""
    return sfft.fftn(samples, axes=grid.axes, norm="forward")


def inv(grid, coeffs):
    """Coefficients -> real physical samples, over the trailing ``dim`` axes."""
    return sfft.ifftn(coeffs, axes=grid.axes, norm="forward").real


def inv_padded(grid, coeffs, m):
    """Evaluate a trigonometric polynomial on a finer m^dim grid (m >= n)."""
    if m == grid.n:
        return inv(grid, coeffs)
    lead = coeffs.shape[: coeffs.ndim - grid.dim]
    out = np.zeros(lead + (m,) * grid.dim, dtype=complex)
    h = grid.n // 2
    # copy the index blocks [0, h) and [n - h + 1, n); Nyquist dropped
    lo = [slice(0, h), slice(grid.n - h + 1, grid.n)]
    hi = [slice(0, h), slice(m - h + 1, m)]
    for blocks in np.ndindex(*([2] * grid.dim)):
        src = tuple(lo[b] for b in blocks)
        dst = tuple(hi[b] for b in blocks)
        out[(Ellipsis,) + dst] = coeffs[(Ellipsis,) + src]
    return sfft.ifftn(out, axes=grid.axes, norm="forward").real


def transform_to_physical(f):
    """Samples of ``f`` on the collocation grid, shape ``(components, n, ...)``."""
    return inv(f.grid, f.coeffs)


def transform_to_spectral(samples, grid):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == grid.dim:
        samples = samples[np.newaxis]
    if samples.shape[1:] != grid.shape:
        raise ValueError(f"sample shape {samples.shape[1:]} does not match grid {grid.shape}")
    return SpectralField(grid, fwd(grid, samples))


# ---------------------------------------------------------------- operators


def gradient(f):
    if not f.is_scalar:
        raise ValueError("gradient expects a scalar field")
    g = f.grid
    return SpectralField(g, 1j * g.k * f.coeffs[0])


def divergence(v):
    g = v.grid
    if v.ncomp != g.dim:
        raise ValueError("divergence expects a vector field")
    return SpectralField(g, np.sum(1j * g.k * v.coeffs, axis=0))


def laplacian(f):
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def curl_free_residual(v):
    """Largest |k_i v_j - k_j v_i| over all modes; zero for gradient fields."""
    g = v.grid
    worst = 0.0
    for i in range(g.dim):
        for j in range(i + 1, g.dim):
            r = g.k[i] * v.coeffs[j] - g.k[j] * v.coeffs[i]
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


def q_hat(grid, coeffs):
    """Gradient part of vector coefficients (leading axes allowed before the component axis)."""
    k = grid.k
    k2 = np.where(grid.k2 > 0, grid.k2, 1.0)
    kdotv = np.sum(k * coeffs, axis=-grid.dim - 1, keepdims=True)
    return np.where(grid.k2 > 0, kdotv * k / k2, 0.0)


def leray_Q(v):
    """Projection onto gradients, ``(k.v) k/|k|^2`` per mode; the mean goes to P."""
    if v.ncomp != v.grid.dim:
        raise ValueError("leray_Q expects a vector field")
    return SpectralField(v.grid, q_hat(v.grid, v.coeffs))


def leray_P(v):
    if v.ncomp != v.grid.dim:
        raise ValueError("leray_P expects a vector field")
    return SpectralField(v.grid, v.coeffs - q_hat(v.grid, v.coeffs))


def _check_mean(grid, coeffs, what):
    zero = (Ellipsis,) + (0,) * grid.dim
    mean = np.max(np.abs(coeffs[zero])) if coeffs.size else 0.0
    total = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    if mean > MEAN_TOL * max(total, np.finfo(float).tiny):
        raise NegativePowerOfMeanMode(f"{what} needs a zero-mean field (mean mode amplitude {mean:.3e})")


def frac_laplacian(f, a):
    """Apply ``(-Delta)^{a/2}``: multiply mode k by |k|^a, send the mean to zero."""
    g = f.grid
    if a < 0:
        _check_mean(g, f.coeffs, f"(-Delta)^({a}/2)")
    kmag = g.kmag
    mult = np.where(kmag > 0, np.power(np.where(kmag > 0, kmag, 1.0), a), 0.0)
    return SpectralField(g, mult * f.coeffs)


def sobolev_weight(grid, s, homogeneous):
    """Per-mode weight: |k|^{2s} (mean excluded when s != 0) or (1+|k|^2)^s."""
    if homogeneous:
        if s == 0:
            return np.ones(grid.shape)
        safe = np.where(grid.k2 > 0, grid.k2, 1.0)
        return np.where(grid.k2 > 0, safe**s, 0.0)
    return (1.0 + grid.k2) ** s


def sobolev_sq(grid, coeffs, s, homogeneous):
    """Squared H^s norms of coefficient arrays, reducing component + space axes.

    Leading axes beyond (components, *space) are kept.
    """
    if homogeneous and s < 0:
        _check_mean(grid, coeffs, f"homogeneous H^{s}")
    w = sobolev_weight(grid, s, homogeneous)
    red = tuple(range(-grid.dim - 1, 0))
    return grid.volume * np.sum(w * np.abs(coeffs) ** 2, axis=red)


def sobolev_norm(f, s, homogeneous=False):
    return float(np.sqrt(sobolev_sq(f.grid, f.coeffs, s, homogeneous)))


def _pointwise_magnitude(samples):
    if samples.shape[0] == 1:
        return np.abs(samples[0])
    return np.sqrt(np.sum(samples**2, axis=0))


def lp_of_samples(grid, samples, p):
    """Rectangle-rule L^p norm of physical samples of shape (components, *space)."""
    mag = _pointwise_magnitude(samples)
    if np.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    dv = grid.dx**grid.dim
    return float((np.sum(mag**p) * dv) ** (1.0 / p))


def lp_norm(f, p):
    if not (p >= 1):
        raise ValueError("p must lie in [1, inf]")
    return lp_of_samples(f.grid, transform_to_physical(f), p)


def bessel_potential(f, m):
    """``(I - Delta)^{-m/2} f``."""
    return SpectralField(f.grid, (1.0 + f.grid.k2) ** (-m / 2.0) * f.coeffs)


def neg_sobolev_lp_norm(f, m, p):
    """W^{-m,p} norm as ``||(I - Delta)^{-m/2} f||_{L^p}``."""
    if m < 0:
        raise ValueError("order m must be nonnegative")
    return lp_norm(bessel_potential(f, m), p)


def dealias(f):
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def inner(f, g):
    """Real L^2 inner product of two real fields with the same component count."""
    return float(f.grid.volume * np.sum((f.coeffs * np.conj(g.coeffs)).real))


def random_field(grid, rng, components=1, band=None):
    """Seeded real field with unit-variance coefficients on |k_j| <= band.

    ``band`` defaults to the dealiasing cutoff; the mean mode is left in.
    """
    samples = rng.standard_normal((components,) + grid.shape)
    c = fwd(grid, samples)
    if band is None:
        c *= grid.dealias_mask
    else:
        ints = np.abs(grid.k) * grid.length / (2 * np.pi)
        c *= np.all(ints <= band, axis=0)
    return SpectralField(grid, c)


# ---------------------------------------------------------------- snapshots


def write_snapshot(f, stem, t=0.0, extra=None):
    """Write physical samples as little-endian doubles, one file per component.

    Produces ``<stem>.json`` and ``<stem>.c<i>.bin``.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    samples = transform_to_physical(f)
    files = []
    for i, comp in enumerate(samples):
        name = f"{stem.name}.c{i}.bin"
        np.ascontiguousarray(comp, dtype="<f8").tofile(stem.parent / name)
        files.append(name)
    manifest = dict(f.grid.to_dict(), t=float(t), components=f.ncomp, files=files)
    if extra:
        manifest.update(extra)
    (stem.parent / f"{stem.name}.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


def read_snapshot(stem):
    stem = Path(stem)
    manifest = json.loads((stem.parent / f"{stem.name}.json").read_text())
    grid = TorusGrid(manifest["dim"], manifest["n"], manifest["L"])
    comps = [np.fromfile(stem.parent / name, dtype="<f8").reshape(grid.shape) for name in manifest["files"]]
    return transform_to_spectral(np.stack(comps), grid), manifest["t"]
