import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from acns import spectral as sp
from acns.errors import NegativePowerOfMeanMode


def direct_coefficients(samples, L):
    """Brute-force DFT: fhat_k = N^-d sum_x f(x) e^{-i k.x} (2D)."""
    n = samples.shape[-1]
    x = np.arange(n) * L / n
    ks = np.fft.fftfreq(n, d=1.0 / n) * 2 * np.pi / L
    out = np.zeros((n, n), dtype=complex)
    for a, ka in enumerate(ks):
        for b, kb in enumerate(ks):
            phase = np.exp(-1j * (ka * x[:, None] + kb * x[None, :]))
            out[a, b] = np.sum(samples * phase) / n**2
    return out


@pytest.fixture
def g2():
    return sp.TorusGrid(2, 16)


@pytest.fixture
def g3():
    return sp.TorusGrid(3, 8)


class TestGrid:
    def test_rejects_bad_sizes(self):
        for n in (6, 15):
            with pytest.raises(ValueError):
                sp.TorusGrid(2, n)
        with pytest.raises(ValueError):
            sp.TorusGrid(4, 8)

    def test_symmetric_lattice(self, g2):
        # Nyquist row carries wavenumber 0, so the set is closed under k -> -k
        vals = sorted(set(np.round(g2.k[0].ravel(), 12)))
        assert vals == sorted(set(-v for v in vals))

    def test_dealias_mask_two_thirds(self, g2):
        idx = np.fft.fftfreq(g2.n, d=1.0 / g2.n)
        a, b = np.meshgrid(np.abs(idx), np.abs(idx), indexing="ij")
        keep = (a <= g2.n / 3) & (b <= g2.n / 3)
        assert np.array_equal(g2.dealias_mask.astype(bool), keep)

    def test_dx_and_volume(self):
        g = sp.TorusGrid(3, 8, length=3.0)
        assert g.dx == pytest.approx(3.0 / 8)
        assert g.volume == pytest.approx(27.0)


class TestTransforms:
    def test_matches_direct_sum(self, g2):
        rng = np.random.default_rng(1)
        f = rng.standard_normal(g2.shape)
        c = sp.transform_to_spectral(f[None], g2).coeffs[0]
        assert np.allclose(c, direct_coefficients(f, g2.length), atol=1e-14)

    def test_round_trip(self, g3):
        rng = np.random.default_rng(2)
        f = rng.standard_normal((3,) + g3.shape)
        back = sp.transform_to_physical(sp.transform_to_spectral(f, g3))
        assert np.allclose(back, f, atol=1e-13)

    def test_single_mode_coefficient(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral(np.cos(2 * x[0])[None], g2)
        c = f.coeffs[0]
        assert c[2, 0] == pytest.approx(0.5)
        assert c[-2, 0] == pytest.approx(0.5)
        assert np.sum(np.abs(c) > 1e-12) == 2

    def test_padded_evaluation_is_exact(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral((np.sin(x[0]) * np.cos(3 * x[1]))[None], g2)
        m = 40
        fine = sp.inv_padded(g2, f.coeffs, m)[0]
        xf = g2.coordinates(m)
        assert np.allclose(fine, np.sin(xf[0]) * np.cos(3 * xf[1]), atol=1e-13)

    def test_leading_axes(self, g2):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((5, 2) + g2.shape)
        c = sp.fwd(g2, f)
        for i in range(5):
            assert np.allclose(c[i], sp.fwd(g2, f[i]))


class TestOperators:
    def test_gradient_of_product_mode(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral((np.sin(2 * x[0]) * np.cos(x[1]))[None], g2)
        grad = sp.transform_to_physical(sp.gradient(f))
        assert np.allclose(grad[0], 2 * np.cos(2 * x[0]) * np.cos(x[1]), atol=1e-12)
        assert np.allclose(grad[1], -np.sin(2 * x[0]) * np.sin(x[1]), atol=1e-12)

    def test_laplacian_eigenvalue(self, g3):
        x = g3.coordinates()
        f = sp.transform_to_spectral((np.sin(x[0] + 2 * x[2]))[None], g3)
        lap = sp.transform_to_physical(sp.laplacian(f))[0]
        assert np.allclose(lap, -5 * np.sin(x[0] + 2 * x[2]), atol=1e-12)

    def test_divergence_of_gradient_is_laplacian(self, g2):
        f = sp.random_field(g2, np.random.default_rng(4))
        a = sp.divergence(sp.gradient(f)).coeffs
        b = sp.laplacian(f).coeffs
        assert np.allclose(a, b, atol=1e-12)

    def test_projectors(self, g3):
        v = sp.random_field(g3, np.random.default_rng(5), components=3)
        P, Q = sp.leray_P(v), sp.leray_Q(v)
        assert np.allclose((P + Q).coeffs, v.coeffs, atol=1e-14)
        assert np.allclose(sp.leray_P(P).coeffs, P.coeffs, atol=1e-14)
        assert np.allclose(sp.leray_Q(P).coeffs, 0, atol=1e-14)
        assert np.max(np.abs(sp.divergence(P).coeffs)) < 1e-12
        assert sp.curl_free_residual(Q) < 1e-12

    def test_mean_belongs_to_P(self, g2):
        c = np.zeros((2,) + g2.shape, dtype=complex)
        c[:, 0, 0] = [1.0, -2.0]
        v = sp.SpectralField(g2, c)
        assert np.allclose(sp.leray_P(v).coeffs, c)

    def test_frac_laplacian_multiplier(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral((np.cos(3 * x[0] + 4 * x[1]))[None], g2)
        out = sp.transform_to_physical(sp.frac_laplacian(f, 0.5))[0]
        assert np.allclose(out, np.sqrt(5) * np.cos(3 * x[0] + 4 * x[1]), atol=1e-12)

    def test_frac_laplacian_needs_zero_mean_for_negative_power(self, g2):
        f = sp.transform_to_spectral(np.ones((1,) + g2.shape), g2)
        with pytest.raises(NegativePowerOfMeanMode):
            sp.frac_laplacian(f, -1)
        assert np.allclose(sp.frac_laplacian(f, 2).coeffs, 0)

    def test_bessel_potential_inverts_helmholtz(self, g2):
        f = sp.random_field(g2, np.random.default_rng(6))
        u = sp.bessel_potential(f, 2)
        back = u - sp.laplacian(u)
        assert np.allclose(back.coeffs, f.coeffs, atol=1e-13)


class TestNorms:
    def test_plancherel(self, g3):
        f = sp.random_field(g3, np.random.default_rng(7), components=3)
        phys = sp.transform_to_physical(f)
        direct = np.sum(phys**2) * g3.dx**3
        assert sp.sobolev_norm(f, 0) ** 2 == pytest.approx(direct, rel=1e-12)

    def test_single_mode_sobolev(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral(np.sin(2 * x[0] + x[1])[None], g2)
        l2 = 2 * np.pi**2  # int sin^2 over (2 pi)^2
        assert sp.sobolev_norm(f, 1.5) ** 2 == pytest.approx(l2 * 6**1.5, rel=1e-12)
        assert sp.sobolev_norm(f, -1, homogeneous=True) ** 2 == pytest.approx(l2 / 5, rel=1e-12)

    def test_lp_closed_form(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral(np.sin(x[0])[None], g2)
        # int sin^4 = 3/8 * (2 pi)^2
        assert sp.lp_norm(f, 4) == pytest.approx((3 / 8 * 4 * np.pi**2) ** 0.25, rel=1e-12)
        assert sp.lp_norm(f, np.inf) == pytest.approx(1.0, abs=1e-3)

    def test_lp_vector_magnitude(self, g2):
        x = g2.coordinates()
        v = sp.transform_to_spectral(np.stack([np.cos(x[0]), np.sin(x[0])]), g2)
        assert sp.lp_norm(v, 3) == pytest.approx((4 * np.pi**2) ** (1 / 3), rel=1e-12)

    def test_neg_sobolev_lp(self, g2):
        x = g2.coordinates()
        f = sp.transform_to_spectral(np.cos(x[0])[None], g2)
        # (I - Lap)^{-1} cos x = cos x / 2
        assert sp.neg_sobolev_lp_norm(f, 2, 2) == pytest.approx(0.5 * np.sqrt(2) * np.pi, rel=1e-12)

    def test_duality(self, g2):
        rng = np.random.default_rng(8)
        f = sp.random_field(g2, rng)
        h = sp.random_field(g2, rng)
        f = f - sp.SpectralField(g2, np.where(g2.k2 == 0, f.coeffs, 0))
        h = h - sp.SpectralField(g2, np.where(g2.k2 == 0, h.coeffs, 0))
        lhs = abs(sp.inner(f, h))
        rhs = sp.sobolev_norm(f, 1, True) * sp.sobolev_norm(h, -1, True)
        assert lhs <= rhs * (1 + 1e-12)


class TestSnapshots:
    def test_round_trip(self, tmp_path, g2):
        f = sp.random_field(g2, np.random.default_rng(9), components=2)
        sp.write_snapshot(f, tmp_path / "snap", t=0.25, extra={"note": "x"})
        back, t = sp.read_snapshot(tmp_path / "snap")
        assert t == 0.25
        assert np.allclose(back.coeffs, f.coeffs, atol=1e-14)
        raw = np.fromfile(tmp_path / "snap.c1.bin", dtype="<f8")
        assert raw.size == g2.n**2


@settings(max_examples=30, deadline=None)
@given(seed=hst.integers(0, 10**6), a=hst.floats(-3, 3), b=hst.floats(-3, 3))
def test_transform_is_linear(seed, a, b):
    g = sp.TorusGrid(2, 8)
    rng = np.random.default_rng(seed)
    f, h = rng.standard_normal((2, 1) + g.shape)
    lhs = sp.fwd(g, a * f + b * h)
    assert np.allclose(lhs, a * sp.fwd(g, f) + b * sp.fwd(g, h), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=hst.integers(0, 10**6))
def test_projection_orthogonality(seed):
    g = sp.TorusGrid(2, 8)
    v = sp.random_field(g, np.random.default_rng(seed), components=2)
    assert abs(sp.inner(sp.leray_P(v), sp.leray_Q(v))) < 1e-12 * sp.sobolev_norm(v, 0) ** 2
