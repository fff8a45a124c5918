"""Gridless signal and frequency recovery by reweighted atomic-norm minimization.

Library layout:

- :mod:`ramfreq.core` -- domain types, steering vectors, Toeplitz algebra,
  synthetic data generation.
- :mod:`ramfreq.vandermonde` -- frequency/power retrieval from PSD Toeplitz
  matrices.
- :mod:`ramfreq.admm` -- the inner weighted-SDP solver.
- :mod:`ramfreq.ram` -- the outer reweighting loop, ANM, and the sparse
  metric evaluator.
- :mod:`ramfreq.baselines` -- MUSIC / periodogram / Capon spectra.
- :mod:`ramfreq.metrics` / :mod:`ramfreq.oracles` -- success metrics and
  independent validation oracles.
- :mod:`ramfreq.harness` / :mod:`ramfreq.cli` -- experiment drivers and the
  command-line interface.
"""

from .admm import AdmmConfig, SdpSolution, SolverError, WeightedSdpProblem, psd_project, solve
from .baselines import Pseudospectrum, capon_spectrum, music_spectrum, periodogram_spectrum, pick_peaks, sample_covariance
from .core import (
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
from .metrics import TrialOutcome, freq_mse, is_success, signal_rel_mse
from .oracles import OracleError, atomic_l0_oracle, grid_l21_oracle
from .ram import (
    AnmResult,
    RamConfig,
    RamReport,
    anm_solve,
    capon_weight,
    dimension_reduce,
    ram_solve,
    scale_observations,
    sparse_metric,
    weight_update,
    weighting_function,
)
from .vandermonde import VandermondeDecomposition, decompose, numeric_rank, recover_coefficients

__version__ = "0.1.0"
