import numpy as np
import pytest
from numpy.testing import assert_allclose

from ramfreq.core import ObservationSet, steering, steering_matrix, synthesize, LineSpectrum
from ramfreq.vandermonde import decompose, numeric_rank, recover_coefficients


def atoms_matrix(freqs, powers, n):
    a = steering_matrix(freqs, n)
    return (a * np.asarray(powers)) @ a.conj().T


class TestNumericRank:
    def test_clear_gap(self):
        assert numeric_rank([5.0, 3.0, 1e-14], 1e-6) == 2

    def test_zero_matrix(self):
        assert numeric_rank([0.0, 0.0], 1e-6) == 0
        assert numeric_rank([], 1e-6) == 0

    def test_full_rank(self):
        assert numeric_rank([1.0, 0.9, 0.8], 1e-6) == 3


class TestDecompose:
    def test_two_atoms(self):
        t = atoms_matrix([0.3, 0.7], [2.0, 1.0], 8)
        dec = decompose(t, 1e-8)
        assert dec.rank == 2
        assert_allclose(dec.freqs, [0.3, 0.7], atol=1e-8)
        assert_allclose(dec.powers, [2.0, 1.0], rtol=1e-6)

    def test_zero_matrix(self):
        dec = decompose(np.zeros((6, 6)), 1e-8)
        assert dec.rank == 0 and dec.freqs.size == 0

    def test_rank_one_at_dc(self):
        t = atoms_matrix([0.0], [3.0], 4)
        dec = decompose(t, 1e-8)
        assert dec.rank == 1
        assert dec.freqs[0] == pytest.approx(0.0, abs=1e-9)
        assert dec.powers[0] == pytest.approx(3.0, rel=1e-8)

    def test_round_trip_property(self, rng):
        # random r <= N/2 separated atoms: freqs to 1e-7, powers to 1e-6 rel
        n = 12
        for _ in range(20):
            r = int(rng.integers(1, n // 2 + 1))
            while True:
                freqs = np.sort(rng.uniform(size=r))
                gaps = np.diff(freqs, append=freqs[0] + 1.0)
                if r == 1 or gaps.min() >= 1.5 / n:
                    break
            powers = rng.uniform(0.5, 3.0, size=r)
            dec = decompose(atoms_matrix(freqs, powers, n), 1e-8)
            assert dec.rank == r
            assert np.max(np.abs(dec.freqs - freqs)) < 1e-7
            assert np.max(np.abs(dec.powers - powers) / powers) < 1e-6

    def test_reconstruction_residual(self, rng):
        n = 10
        t = atoms_matrix([0.05, 0.31, 0.62], [1.0, 2.0, 0.3], n)
        dec = decompose(t, 1e-8)
        assert np.linalg.norm(dec.reconstruct(n) - t) <= 1e-6 * np.linalg.norm(t)

    def test_output_sorted_and_order_invariant(self):
        n = 9
        t1 = atoms_matrix([0.7, 0.2], [1.0, 2.0], n)
        t2 = atoms_matrix([0.2, 0.7], [2.0, 1.0], n)
        d1, d2 = decompose(t1, 1e-8), decompose(t2, 1e-8)
        assert np.all(np.diff(d1.freqs) > 0)
        assert_allclose(d1.freqs, d2.freqs, atol=1e-9)
        assert_allclose(d1.powers, d2.powers, rtol=1e-7)

    def test_non_psd_raises(self):
        m = np.diag([1.0, -0.5, 0.2]).astype(complex)
        with pytest.raises(ValueError):
            decompose(m, 1e-8)

    def test_full_rank_sets_ambiguity_flag(self, rng):
        n = 4
        t = atoms_matrix(np.linspace(0.05, 0.8, n), np.ones(n), n) + 0.5 * np.eye(n)
        dec = decompose(t, 1e-8)
        assert dec.ambiguous


class TestRecoverCoefficients:
    def test_consistent_system_exact(self, rng):
        n, m = 16, 9
        freqs = np.array([0.11, 0.37, 0.8])
        coeffs = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        full = synthesize(LineSpectrum(freqs, coeffs), n)
        omega = np.sort(rng.choice(n, size=m, replace=False))
        obs = ObservationSet(n, omega, full[omega, :])
        rec = recover_coefficients(freqs, obs)
        assert np.linalg.norm(rec - coeffs) < 1e-10 * np.linalg.norm(coeffs)

    def test_dc_atom_gives_column_mean(self, rng):
        n = 8
        y = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
        obs = ObservationSet(n, np.arange(n), y)
        rec = recover_coefficients([0.0], obs)
        assert_allclose(rec[0], y.mean(axis=0), atol=1e-12)

    def test_empty_freqs(self, rng):
        obs = ObservationSet(4, np.arange(4), rng.standard_normal((4, 2)).astype(complex))
        assert recover_coefficients([], obs).shape == (0, 2)

    def test_underdetermined_raises(self, rng):
        obs = ObservationSet(8, [0, 1], rng.standard_normal((2, 1)).astype(complex))
        with pytest.raises(ValueError):
            recover_coefficients([0.1, 0.2, 0.3], obs)
