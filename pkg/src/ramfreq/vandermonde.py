"""Vandermonde decomposition of PSD Hermitian Toeplitz matrices.

Any PSD Toeplitz matrix T of rank r < N decomposes uniquely as

    T = sum_k p_k a(f_k) a(f_k)^H,    p_k > 0,

which is how frequencies are read off the solver output.  Frequencies are
retrieved by rotational invariance of the signal subspace (ESPRIT) and the
powers by nonnegative least squares against the recovered atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .core import HermitianToeplitz, ObservationSet, steering_matrix

__all__ = [
    "VandermondeDecomposition",
    "numeric_rank",
    "decompose",
    "recover_coefficients",
]


@dataclass(frozen=True)
class VandermondeDecomposition:
    """Recovered atoms: frequencies ascending in [0, 1) with positive powers.

    ``ambiguous`` flags the r = N case, where the decomposition is not
    unique and the frequency estimates are one of many valid choices.
    """

    freqs: np.ndarray
    powers: np.ndarray
    rank: int
    ambiguous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "freqs", np.asarray(self.freqs, dtype=float))
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))

    def reconstruct(self, n: int) -> np.ndarray:
        a = steering_matrix(self.freqs, n)
        return (a * self.powers) @ a.conj().T


def numeric_rank(eigenvalues, rel_tol: float) -> int:
    """Count of eigenvalues above rel_tol times the largest; 0 for the zero matrix.

    ``eigenvalues`` must be sorted descending with a nonnegative leading
    entry.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size == 0 or lam[0] <= 0.0:
        return 0
    return int(np.count_nonzero(lam > rel_tol * lam[0]))


def decompose(t: HermitianToeplitz | np.ndarray, rel_tol: float = 1e-8) -> VandermondeDecomposition:
    """Decompose a (numerically) PSD Toeplitz matrix into atoms and powers.

    Eigenvalues in [-rel_tol * lambda_max, 0) are clamped to zero; anything
    more negative raises.  The rank is thresholded at rel_tol relative to
    the top eigenvalue, frequencies come from least-squares rotational
    invariance on the rank-r eigen-subspace, and powers from nonnegative
    least squares with exact zeros pruned.
    """
    mat = t.matrix() if isinstance(t, HermitianToeplitz) else np.asarray(t, dtype=complex)
    n = mat.shape[0]
    lam, vec = np.linalg.eigh(mat)
    lam = lam[::-1]
    vec = vec[:, ::-1]
    lam_max = max(lam[0], 0.0)
    if lam[-1] < -rel_tol * max(lam_max, 1e-300):
        raise ValueError(
            f"matrix is not PSD within tolerance: min eigenvalue {lam[-1]:.3e} "
            f"vs -{rel_tol:.1e} * {lam_max:.3e}"
        )
    lam = np.maximum(lam, 0.0)
    r = numeric_rank(lam, rel_tol)
    if r == 0:
        return VandermondeDecomposition(
            freqs=np.empty(0), powers=np.empty(0), rank=0
        )
    ambiguous = r == n

    sig = vec[:, :r]
    phi = np.linalg.lstsq(sig[:-1, :], sig[1:, :], rcond=None)[0]
    freqs = np.mod(np.angle(np.linalg.eigvals(phi)) / (2.0 * np.pi), 1.0)
    freqs = np.sort(freqs)

    powers = _nnls_powers(mat, freqs)
    keep = powers > 0.0
    freqs, powers = freqs[keep], powers[keep]
    return VandermondeDecomposition(
        freqs=freqs, powers=powers, rank=freqs.size, ambiguous=ambiguous
    )


def _nnls_powers(mat, freqs):
    """Nonnegative LS fit of mat against the rank-one atom matrices."""
    n = mat.shape[0]
    a = steering_matrix(freqs, n)
    outer = np.einsum("nk,mk->knm", a, a.conj())  # k-th slice = a_k a_k^H
    design = outer.reshape(freqs.size, -1).T
    design = np.vstack([design.real, design.imag])
    target = np.concatenate([mat.real.ravel(), mat.imag.ravel()])
    powers, _ = scipy.optimize.nnls(design, target)
    return powers


def recover_coefficients(freqs, obs: ObservationSet) -> np.ndarray:
    """Least-squares coefficient matrix for known frequencies.

    Solves A_Omega(freqs) S ~= Y_Omega in the least-squares sense, where
    A_Omega keeps the observed rows of the steering matrix.  Requires
    K <= M so the system is not underdetermined.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if freqs.size == 0:
        return np.zeros((0, obs.l), dtype=complex)
    if freqs.size > obs.m:
        raise ValueError(
            f"{freqs.size} frequencies but only {obs.m} observed rows (underdetermined)"
        )
    a_omega = steering_matrix(freqs, obs.ambient_n)[obs.omega, :]
    coeffs, *_ = np.linalg.lstsq(a_omega, obs.samples, rcond=None)
    return coeffs
