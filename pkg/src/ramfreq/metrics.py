"""Success metrics for signal and frequency recovery.

A trial is successful when both the relative MSE of the recovered signal
matrix and the MSE of the recovered frequencies fall below the configured
threshold.  Frequency sets of differing cardinality score +inf (the
recovery failed to identify the model order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TrialOutcome",
    "signal_rel_mse",
    "freq_mse",
    "circular_distance",
    "is_success",
]

DEFAULT_SUCCESS_THRESHOLD = 1e-10


@dataclass(frozen=True)
class TrialOutcome:
    """Scored result of one Monte Carlo trial."""

    signal_rel_mse: float
    freq_mse: float
    success: bool
    wall_time: float
    iterations: int = 0
    converged: bool = True


def signal_rel_mse(estimate, truth) -> float:
    """||estimate - truth||_F^2 / ||truth||_F^2."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    denom = np.linalg.norm(truth) ** 2
    if denom == 0.0:
        raise ValueError("reference signal is zero; relative MSE undefined")
    return float(np.linalg.norm(estimate - truth) ** 2 / denom)


def circular_distance(f, g):
    """Distance on the unit circle: min(|f - g|, 1 - |f - g|)."""
    d = np.abs(np.asarray(f, dtype=float) - np.asarray(g, dtype=float))
    return np.minimum(d, 1.0 - d)


def freq_mse(est_freqs, true_freqs) -> float:
    """Mean squared circular distance under the best order-preserving matching.

    Both sets are sorted and every cyclic shift of the matching is tried;
    differing cardinalities return +inf.  Symmetric in its arguments.
    """
    est = np.sort(np.mod(np.atleast_1d(np.asarray(est_freqs, dtype=float)), 1.0))
    true = np.sort(np.mod(np.atleast_1d(np.asarray(true_freqs, dtype=float)), 1.0))
    if est.size != true.size:
        return float("inf")
    k = est.size
    if k == 0:
        return 0.0
    best = np.inf
    for shift in range(k):
        d = circular_distance(np.roll(est, shift), true)
        best = min(best, float(np.mean(d**2)))
    return best


def is_success(sig_mse: float, f_mse: float,
               threshold: float = DEFAULT_SUCCESS_THRESHOLD) -> bool:
    return sig_mse < threshold and f_mse < threshold
