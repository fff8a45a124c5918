"""Classical spectral estimators on the sparse array: MUSIC, periodogram, Capon.

All spectra are evaluated on a uniform frequency grid over [0, 1) and
returned as a :class:`Pseudospectrum`; peak extraction is a separate step
working on the circular grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import ObservationSet, steering_matrix

__all__ = [
    "Pseudospectrum",
    "sample_covariance",
    "music_spectrum",
    "periodogram_spectrum",
    "capon_spectrum",
    "pick_peaks",
]

DEFAULT_GRID_SIZE = 2**14


@dataclass(frozen=True)
class Pseudospectrum:
    """Nonnegative spectrum values on a strictly increasing grid in [0, 1)."""

    grid: np.ndarray
    values: np.ndarray
    method: str

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValueError("grid and values must be matching 1-d arrays")
        if grid.size and (grid[0] < 0 or grid[-1] >= 1 or np.any(np.diff(grid) <= 0)):
            raise ValueError("grid must be strictly increasing within [0, 1)")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["f", "value"])
            for f, v in zip(self.grid, self.values):
                writer.writerow([repr(float(f)), repr(float(v))])


def _grid(grid_size):
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    return np.arange(grid_size) / grid_size


def sample_covariance(obs: ObservationSet) -> np.ndarray:
    """(1/L) Y Y^H over the observed rows; Hermitian PSD by construction."""
    cov = obs.samples @ obs.samples.conj().T / obs.l
    return 0.5 * (cov + cov.conj().T)


def music_spectrum(obs: ObservationSet, k: int, grid_size: int = DEFAULT_GRID_SIZE) -> Pseudospectrum:
    """MUSIC pseudospectrum 1 / ||E_n^H a_Omega(f)||^2 with known source count k.

    E_n spans the M - k smallest eigenvectors of the sample covariance;
    requires 1 <= k < M so the noise subspace is nontrivial.
    """
    if not 1 <= k < obs.m:
        raise ValueError(f"need 1 <= k < M = {obs.m}, got k = {k}")
    cov = sample_covariance(obs)
    _, vec = np.linalg.eigh(cov)  # ascending
    noise = vec[:, : obs.m - k]
    grid = _grid(grid_size)
    a_omega = steering_matrix(grid, obs.ambient_n)[obs.omega, :]
    denom = np.sum(np.abs(noise.conj().T @ a_omega) ** 2, axis=0)
    values = 1.0 / np.maximum(denom, np.finfo(float).tiny)
    return Pseudospectrum(grid=grid, values=values, method="music")


def periodogram_spectrum(obs: ObservationSet, grid_size: int = DEFAULT_GRID_SIZE) -> Pseudospectrum:
    """Snapshot-averaged periodogram |a_Omega(f)^H y|^2 / M^2 on the sparse array."""
    grid = _grid(grid_size)
    a_omega = steering_matrix(grid, obs.ambient_n)[obs.omega, :]
    proj = a_omega.conj().T @ obs.samples
    values = np.sum(np.abs(proj) ** 2, axis=1) / (obs.l * obs.m**2)
    return Pseudospectrum(grid=grid, values=values, method="periodogram")


def capon_spectrum(obs: ObservationSet, grid_size: int = DEFAULT_GRID_SIZE,
                   reg: float = 0.0) -> Pseudospectrum:
    """Capon (MVDR) spectrum 1 / (a^H R^{-1} a) from the regularized sample covariance."""
    cov = sample_covariance(obs)
    lam, vec = np.linalg.eigh(cov)
    lam = np.maximum(lam, 0.0) + max(reg, 1e-12 * max(lam[-1], 1.0))
    inv = (vec * (1.0 / lam)) @ vec.conj().T
    grid = _grid(grid_size)
    a_omega = steering_matrix(grid, obs.ambient_n)[obs.omega, :]
    quad = np.einsum("mk,mk->k", a_omega.conj(), inv @ a_omega).real
    values = 1.0 / np.maximum(quad, np.finfo(float).tiny)
    return Pseudospectrum(grid=grid, values=values, method="capon")


def pick_peaks(spec: Pseudospectrum, k: int, interpolate: bool = False):
    """The k largest strict local maxima on the circular grid, sorted by frequency.

    Returns (freqs, shortfall): when fewer than k maxima exist, all found
    are returned and ``shortfall`` is True.  With ``interpolate`` each peak
    is refined by a local quadratic fit through its two neighbors.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    v = spec.values
    g = v.size
    left = np.roll(v, 1)
    right = np.roll(v, -1)
    is_peak = (v > left) & (v > right)
    idx = np.flatnonzero(is_peak)
    shortfall = idx.size < k
    order = np.argsort(v[idx])[::-1]
    chosen = idx[order[:k]]
    if interpolate and chosen.size:
        freqs = np.array([_quadratic_peak(spec.grid, v, i) for i in chosen])
    else:
        freqs = spec.grid[chosen]
    return np.sort(freqs), shortfall


def _quadratic_peak(grid, values, i):
    g = values.size
    step = 1.0 / g
    y0, y1, y2 = values[(i - 1) % g], values[i], values[(i + 1) % g]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return grid[i]
    shift = 0.5 * (y0 - y2) / denom
    return float(np.mod(grid[i] + shift * step, 1.0))
