"""Domain types, steering vectors, Toeplitz algebra and synthetic data.

Signal model: an N x L data matrix is a superposition of K complex
sinusoids,

    Y[j, t] = sum_k  S[k, t] * exp(i 2 pi (j - 1) f_k),    f_k in [0, 1),

observed only on rows indexed by a subset Omega of {0, ..., N-1}, with
the noise Frobenius norm bounded by eta.  Everything here is a pure
function of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LineSpectrum",
    "ObservationSet",
    "HermitianToeplitz",
    "steering",
    "synthesize",
    "sample",
    "noise_bound",
    "toeplitz_build",
    "toeplitz_adjoint",
    "canonicalize_freq",
]


def canonicalize_freq(f):
    """Map frequencies onto the unit circle [0, 1)."""
    return np.mod(np.asarray(f, dtype=float), 1.0)


@dataclass(frozen=True)
class LineSpectrum:
    """A set of K sinusoids: frequencies (cycles/sample) and K x L coefficients.

    Frequencies are canonicalized modulo 1 into [0, 1) and must be pairwise
    distinct; row k of ``coeffs`` holds the L coefficients of frequency k.
    """

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = canonicalize_freq(np.atleast_1d(self.freqs))
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim < 2:
            coeffs = coeffs.reshape(-1, 1)
        if coeffs.shape[0] != freqs.size:
            raise ValueError(
                f"coeff rows ({coeffs.shape[0]}) != number of frequencies ({freqs.size})"
            )
        if freqs.size > 1 and np.min(np.diff(np.sort(freqs))) == 0.0:
            raise ValueError("frequencies must be pairwise distinct")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def k(self) -> int:
        return self.freqs.size

    @property
    def l(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class ObservationSet:
    """Partial noisy observations of an ambient length-N signal matrix.

    ``omega`` is stored 0-based and strictly increasing; external formats
    (configs, reports) use the 1-based convention and convert at the
    boundary via :meth:`from_one_based` / :attr:`omega_one_based`.
    ``eta`` bounds the noise Frobenius norm; 0 means noiseless.
    """

    ambient_n: int
    omega: np.ndarray
    samples: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=int)
        samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if self.ambient_n < 1:
            raise ValueError("ambient_n must be positive")
        if omega.ndim != 1 or omega.size == 0:
            raise ValueError("omega must be a nonempty 1-d index list")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("omega must be strictly increasing")
        if omega[0] < 0 or omega[-1] >= self.ambient_n:
            raise ValueError(f"omega entries must lie in [0, {self.ambient_n})")
        if samples.shape[0] != omega.size:
            raise ValueError(
                f"samples has {samples.shape[0]} rows but omega selects {omega.size}"
            )
        if not self.eta >= 0.0:
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "eta", float(self.eta))

    @classmethod
    def from_one_based(cls, ambient_n, omega_one_based, samples, eta=0.0):
        omega = np.asarray(omega_one_based, dtype=int) - 1
        return cls(ambient_n, omega, samples, eta)

    @property
    def omega_one_based(self) -> np.ndarray:
        return self.omega + 1

    @property
    def m(self) -> int:
        return self.omega.size

    @property
    def l(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class HermitianToeplitz:
    """Hermitian Toeplitz matrix T(u) parameterized by its first row ``u``.

    Entry (n, n+d) equals u[d] for d >= 0 and the conjugate below the
    diagonal, so u[0] must be real (and is stored as such).  Positive
    semidefiniteness is a property of the value, not an invariant of the
    type.
    """

    u: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=complex)).copy()
        if u.ndim != 1 or u.size == 0:
            raise ValueError("u must be a nonempty vector")
        scale = max(1.0, float(np.linalg.norm(u)))
        if abs(u[0].imag) > 1e-9 * scale:
            raise ValueError("u[0] must be real (diagonal of a Hermitian matrix)")
        if u[0].real < -1e-6 * scale:
            raise ValueError("u[0] must be nonnegative (diagonal of a PSD candidate)")
        u[0] = max(u[0].real, 0.0)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.u.size

    def matrix(self) -> np.ndarray:
        return toeplitz_build(self.u)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending."""
        return np.linalg.eigvalsh(self.matrix())[::-1]


def steering(f, n: int) -> np.ndarray:
    """Complex sinusoid atom a(f) = [1, e^{i2pi f}, ..., e^{i2pi (n-1) f}].

    ``f`` must lie in [0, 1); callers wrap other values modulo 1 first.
    The squared Euclidean norm is exactly n.
    """
    f = float(f)
    if not (0.0 <= f < 1.0):
        raise ValueError(f"frequency {f} outside [0, 1); wrap modulo 1 first")
    if n < 1:
        raise ValueError("n must be positive")
    return np.exp(2j * np.pi * f * np.arange(n))


def steering_matrix(freqs, n: int) -> np.ndarray:
    """n x K matrix whose columns are steering vectors a(f_k)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    return np.exp(2j * np.pi * np.outer(np.arange(n), freqs))


def synthesize(spec: LineSpectrum, n: int) -> np.ndarray:
    """Noise-free N x L data matrix sum_k a(f_k) s_k^T; linear in the coefficients."""
    if n < 1:
        raise ValueError("n must be positive")
    if spec.k == 0:
        return np.zeros((n, spec.coeffs.shape[1]), dtype=complex)
    return steering_matrix(spec.freqs, n) @ spec.coeffs


def sample(full: np.ndarray, omega, noise_sigma: float = 0.0, rng=None) -> ObservationSet:
    """Observe rows ``omega`` of ``full`` under circular complex Gaussian noise.

    Per-entry noise variance is noise_sigma**2 in total: real and imaginary
    parts are independent N(0, noise_sigma**2 / 2).  ``rng`` is a seed or a
    numpy Generator; a fixed seed reproduces the draw exactly.  The returned
    set has eta = 0; callers set the bound separately (see
    :func:`noise_bound`).
    """
    full = np.atleast_2d(np.asarray(full, dtype=complex))
    omega = np.asarray(omega, dtype=int)
    n = full.shape[0]
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    obs = full[omega, :].copy()
    if noise_sigma > 0:
        gen = np.random.default_rng(rng)
        shape = obs.shape
        noise = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
        obs += noise * (noise_sigma / np.sqrt(2.0))
    return ObservationSet(ambient_n=n, omega=omega, samples=obs, eta=0.0)


def noise_bound(m: int, l: int, sigma: float) -> float:
    """High-probability bound on the noise Frobenius norm.

    eta^2 = (M L + 2 sqrt(M L)) sigma^2, the mean of the noise energy plus
    twice its standard deviation.
    """
    if m < 1 or l < 1:
        raise ValueError("m and l must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    ml = m * l
    return float(np.sqrt((ml + 2.0 * np.sqrt(ml)) * sigma**2))


def toeplitz_build(u) -> np.ndarray:
    """Hermitian Toeplitz matrix with first row ``u``: entry (n, n+d) = u[d]."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    n = u.size
    idx = np.arange(n)
    d = idx[None, :] - idx[:, None]
    t = u[np.abs(d)]
    np.conjugate(t, where=(d < 0), out=t)
    # force an exactly real diagonal so T is Hermitian bitwise
    t[idx, idx] = u[0].real
    return t


def toeplitz_adjoint(m) -> np.ndarray:
    """Adjoint of u -> T(u) under the real inner product Re tr(A^H B).

    Satisfies Re tr(T(u)^H M) = Re <u, toeplitz_adjoint(M)> for every u with
    real first entry: entry d+1 is the d-th superdiagonal sum plus the
    conjugated d-th subdiagonal sum (twice the superdiagonal sum for
    Hermitian M), and entry 1 is the real part of the diagonal sum.  With
    this convention the gradient of u -> tr(W T(u)) for Hermitian W is
    exactly toeplitz_adjoint(W).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    out = np.empty(n, dtype=complex)
    out[0] = np.trace(m).real
    for d in range(1, n):
        out[d] = np.trace(m, offset=d) + np.conj(np.trace(m, offset=-d))
    return out
