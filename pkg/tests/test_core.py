import numpy as np
import pytest
from numpy.testing import assert_allclose

from ramfreq.core import (
    HermitianToeplitz,
    LineSpectrum,
    ObservationSet,
    noise_bound,
    sample,
    steering,
    steering_matrix,
    synthesize,
    toeplitz_adjoint,
    toeplitz_build,
)


class TestSteering:
    def test_zero_frequency(self):
        assert_allclose(steering(0.0, 4), np.ones(4))

    def test_nyquist_alternation(self):
        assert_allclose(steering(0.5, 4), [1, -1, 1, -1], atol=1e-15)

    def test_quarter_cycle(self):
        # direct evaluation of e^{i 2 pi (j-1)/4}
        assert_allclose(steering(0.25, 4), [1, 1j, -1, -1j], atol=1e-15)

    def test_norm_is_n(self, rng):
        for n in (1, 3, 8, 64):
            for f in rng.uniform(size=6):
                assert abs(np.linalg.norm(steering(f, n)) ** 2 - n) < 1e-12 * n

    def test_domain_error(self):
        with pytest.raises(ValueError):
            steering(1.0, 4)
        with pytest.raises(ValueError):
            steering(-0.1, 4)


class TestSynthesize:
    def test_empty_spectrum_is_zero(self):
        spec = LineSpectrum(freqs=np.empty(0), coeffs=np.empty((0, 3)))
        assert_allclose(synthesize(spec, 5), np.zeros((5, 3)))

    def test_single_atom_linearity(self):
        spec = LineSpectrum(freqs=[0.3], coeffs=[[2.0]])
        assert_allclose(synthesize(spec, 8)[:, 0], 2.0 * steering(0.3, 8))

    def test_additivity(self, rng):
        f = np.array([0.12, 0.7])
        s1 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        s2 = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        a, b = 1.7, -0.4 + 0.2j
        left = synthesize(LineSpectrum(f, a * s1 + b * s2), 10)
        right = a * synthesize(LineSpectrum(f, s1), 10) + b * synthesize(LineSpectrum(f, s2), 10)
        assert np.linalg.norm(left - right) < 1e-12 * np.linalg.norm(right)


class TestSample:
    def test_noiseless_rows_exact(self, rng):
        full = rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2))
        obs = sample(full, [0, 3, 7], noise_sigma=0.0)
        assert_allclose(obs.samples, full[[0, 3, 7], :])
        assert obs.eta == 0.0

    def test_seed_determinism(self, rng):
        full = rng.standard_normal((10, 2)).astype(complex)
        a = sample(full, [1, 2], noise_sigma=0.5, rng=99)
        b = sample(full, [1, 2], noise_sigma=0.5, rng=99)
        assert np.array_equal(a.samples, b.samples)

    def test_noise_variance_monte_carlo(self):
        # per-entry variance sigma^2, real/imag each sigma^2/2
        sigma = 0.7
        full = np.zeros((1, 100_000), dtype=complex)
        obs = sample(full, [0], noise_sigma=sigma, rng=5)
        z = obs.samples.ravel()
        assert abs(np.mean(np.abs(z) ** 2) - sigma**2) < 0.05 * sigma**2
        assert abs(np.var(z.real) - sigma**2 / 2) < 0.05 * sigma**2
        assert abs(np.var(z.imag) - sigma**2 / 2) < 0.05 * sigma**2


class TestNoiseBound:
    def test_reference_value(self):
        # eta^2 = M L sigma^2 + 2 sqrt(M L) sigma^2 at M=10, L=200
        assert noise_bound(10, 200, 1.0) ** 2 == pytest.approx(2089.442719099992, rel=1e-12)

    def test_zero_sigma(self):
        assert noise_bound(3, 7, 0.0) == 0.0

    def test_single_sample(self):
        assert noise_bound(1, 1, 1.0) ** 2 == pytest.approx(3.0, rel=1e-14)


class TestToeplitz:
    def test_unit_u_gives_identity(self):
        assert_allclose(toeplitz_build([1, 0, 0, 0]), np.eye(4))

    def test_hermitian_exactly(self, rng):
        u = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        u[0] = 2.0
        t = toeplitz_build(u)
        assert np.array_equal(t, t.conj().T)

    def test_first_row_convention(self, rng):
        u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        u[0] = 1.0
        t = toeplitz_build(u)
        assert_allclose(t[0, :], u)
        assert_allclose(t[:, 0], u.conj())

    def test_rank_one_atom(self):
        # with entry (n, n+d) = u[d], the phase sequence conj(a(f)) builds a(f)a(f)^H
        f, n = 0.3, 8
        a = steering(f, n)
        t = toeplitz_build(a.conj())
        assert np.linalg.norm(t - np.outer(a, a.conj())) < 1e-12 * n
        assert np.linalg.matrix_rank(t) == 1

    def test_adjoint_of_identity(self):
        out = toeplitz_adjoint(np.eye(6))
        expected = np.zeros(6)
        expected[0] = 6
        assert_allclose(out, expected)

    def test_adjoint_identity_random(self, rng):
        # Re tr(T(u)^H M) = Re <u, T*(M)> on 100 random pairs
        n = 7
        for _ in range(100):
            u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            u[0] = u[0].real
            m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            lhs = np.trace(toeplitz_build(u).conj().T @ m).real
            rhs = np.vdot(u, toeplitz_adjoint(m)).real
            scale = max(np.linalg.norm(u) * np.linalg.norm(m), 1.0)
            assert abs(lhs - rhs) < 1e-10 * scale

    def test_adjoint_of_atom_outer_product(self):
        # M = a(f)a(f)^H has superdiagonal d constant at e^{-i 2 pi d f}, so the
        # adjoint entry d is 2 (N-d) e^{-i 2 pi d f} for d >= 1 and N at d = 0
        f, n = 0.17, 6
        a = steering(f, n)
        out = toeplitz_adjoint(np.outer(a, a.conj()))
        d = np.arange(n)
        expected = 2.0 * (n - d) * np.exp(-2j * np.pi * d * f)
        expected[0] = n
        assert_allclose(out, expected, atol=1e-12)

    def test_adjoint_recovers_scaled_u(self, rng):
        u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        u[0] = abs(u[0].real)
        out = toeplitz_adjoint(toeplitz_build(u))
        d = np.arange(5)
        scale = 2.0 * (5 - d)
        scale[0] = 5
        assert_allclose(out, scale * u, atol=1e-12)

    def test_adjoint_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            toeplitz_adjoint(np.zeros((3, 4)))

    def test_gradient_of_weighted_trace(self, rng):
        # finite differences of u -> tr(W T(u)) match the adjoint exactly
        n = 5
        w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        w = 0.5 * (w + w.conj().T)
        u0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u0[0] = u0[0].real
        adj = toeplitz_adjoint(w)
        h = 1e-6

        def val(u):
            return np.trace(w @ toeplitz_build(u)).real

        for i in range(n):
            for d in (h, 1j * h):
                if i == 0 and d.imag:
                    continue
                g = (val(u0 + d * np.eye(n)[i]) - val(u0 - d * np.eye(n)[i])) / (2 * h)
                expected = adj[i].real if d.imag == 0 else adj[i].imag
                assert abs(g - expected) < 1e-5 * max(1.0, abs(expected))


class TestTypes:
    def test_line_spectrum_validation(self):
        with pytest.raises(ValueError):
            LineSpectrum(freqs=[0.1, 0.1], coeffs=np.ones((2, 1)))
        with pytest.raises(ValueError):
            LineSpectrum(freqs=[0.1], coeffs=np.ones((2, 1)))
        spec = LineSpectrum(freqs=[1.25], coeffs=np.ones((1, 1)))
        assert spec.freqs[0] == pytest.approx(0.25)  # canonicalized mod 1

    def test_observation_set_validation(self, rng):
        y = rng.standard_normal((3, 2)).astype(complex)
        with pytest.raises(ValueError):
            ObservationSet(5, [2, 1, 3], y)  # not increasing
        with pytest.raises(ValueError):
            ObservationSet(5, [0, 1, 5], y)  # out of range
        with pytest.raises(ValueError):
            ObservationSet(5, [0, 1], y)  # row mismatch
        with pytest.raises(ValueError):
            ObservationSet(5, [0, 1, 2], y, eta=-1.0)

    def test_observation_one_based_round_trip(self, rng):
        y = rng.standard_normal((3, 1)).astype(complex)
        obs = ObservationSet.from_one_based(10, [1, 4, 10], y)
        assert obs.omega.tolist() == [0, 3, 9]
        assert obs.omega_one_based.tolist() == [1, 4, 10]

    def test_hermitian_toeplitz_validation(self):
        with pytest.raises(ValueError):
            HermitianToeplitz(np.array([1.0 + 1.0j, 0.0]))
        with pytest.raises(ValueError):
            HermitianToeplitz(np.array([-1.0, 0.0]))
        ht = HermitianToeplitz(np.array([2.0, 1.0 - 1.0j]))
        assert ht.matrix()[0, 1] == 1.0 - 1.0j

    def test_steering_matrix_columns(self):
        freqs = [0.1, 0.4]
        a = steering_matrix(freqs, 6)
        assert_allclose(a[:, 0], steering(0.1, 6))
        assert_allclose(a[:, 1], steering(0.4, 6))
