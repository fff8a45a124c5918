"""Experiment drivers: illustrative run, phase transitions, DOA simulation.

Every experiment is seeded and fully deterministic: each Monte Carlo
trial derives its RNG stream from (seed, cell index, trial index), so
results are identical across runs, resumes and worker counts.  Trials run
in a process pool (never parallelism inside a solve) and results are
merged in trial order.  Phase cells are written incrementally so an
interrupted sweep resumes at the first missing cell.
"""

from __future__ import annotations

import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .admm import AdmmConfig
from .baselines import music_spectrum, pick_peaks
from .core import LineSpectrum, ObservationSet, noise_bound, sample, synthesize
from .metrics import TrialOutcome, circular_distance, freq_mse, is_success, signal_rel_mse
from .ram import RamConfig, anm_solve, capon_weight, ram_solve, weight_update, weighting_function
from . import serialize
from .serialize import SCHEMA_VERSION

__all__ = [
    "ExperimentConfig",
    "PhaseCell",
    "gen_separated_freqs",
    "run_illustrative",
    "run_phase",
    "run_doa",
    "run_recover",
    "effective_workers",
]

log = logging.getLogger(__name__)

THREADS_ENV_VAR = "RAMFREQ_THREADS"

DOA_OMEGA_ONE_BASED = (1, 2, 5, 6, 8, 12, 15, 17, 19, 20)
DOA_FREQS = (0.1, 0.11, 0.2, 0.5)
DOA_POWERS = (10.0, 10.0, 3.0, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run: problem sizes, sweep ranges, solver knobs, outputs.

    ``omega`` (when given) is 1-based, matching the on-paper convention of
    every external file.  ``sep_factors`` are frequency separations in
    units of 1/N.
    """

    kind: str = "illustrative"
    seed: int = 0
    out_dir: str = "out"
    threads: int = 0  # 0 = one worker per CPU (capped at 8)
    table_format: str = "csv"
    # problem geometry
    n: int = 64
    m: int = 30
    l: int = 1
    omega: tuple | None = None
    noise_sigma: float = 0.0
    # illustrative defaults follow the reference scenario
    freqs: tuple = (0.1, 0.108, 0.125, 0.2, 0.5)
    weight_grid: int = 2**12
    # phase sweep
    k_values: tuple = (2, 4, 6, 8, 10, 12)
    sep_factors: tuple = (0.3, 0.54, 0.78, 1.02, 1.26, 1.5)
    trials: int = 10
    success_threshold: float = 1e-10
    detect_rank_tol: float = 1e-5
    # doa
    runs: int = 20
    coherent: bool = False
    doa_freqs: tuple = DOA_FREQS
    doa_powers: tuple = DOA_POWERS
    music_grid: int = 2**14
    freq_tol: float = 0.005
    # recover
    input_path: str | None = None
    recover_signal: bool = True
    # solver configs
    ram: RamConfig = field(default_factory=RamConfig)
    admm: AdmmConfig = field(default_factory=AdmmConfig)

    def workers(self) -> int:
        return effective_workers(self.threads)

    @classmethod
    def from_dict(cls, doc: dict, kind: str | None = None) -> "ExperimentConfig":
        """Build a config from a parsed JSON document, validating key names."""
        doc = dict(doc)
        if kind is not None:
            doc["kind"] = kind
        ram_doc = doc.pop("ram", {})
        admm_doc = doc.pop("admm", {})
        known = {f.name for f in dataclasses.fields(cls)}
        for key in doc:
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
        for sub, sub_cls, name in ((ram_doc, RamConfig, "ram"), (admm_doc, AdmmConfig, "admm")):
            sub_known = {f.name for f in dataclasses.fields(sub_cls)}
            for key in sub:
                if key not in sub_known:
                    raise ValueError(f"unknown config key '{name}.{key}'")
        list_fields = {"omega", "freqs", "k_values", "sep_factors", "doa_freqs", "doa_powers"}
        for key in list_fields & doc.keys():
            if doc[key] is not None:
                doc[key] = tuple(doc[key])
        try:
            return cls(ram=RamConfig(**ram_doc), admm=AdmmConfig(**admm_doc), **doc)
        except TypeError as exc:
            raise ValueError(f"malformed config: {exc}") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class PhaseCell:
    """Aggregated success rates for one (K, separation) cell."""

    k: int
    delta_f: float
    trials: int
    anm_successes: int
    ram_successes: int
    anm_rate: float
    ram_rate: float
    wall_time: float


def effective_workers(requested: int = 0) -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if requested <= 0 and env:
        try:
            requested = int(env)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
    if requested <= 0:
        requested = min(os.cpu_count() or 1, 8)
    return max(requested, 1)


def _limit_blas_threads():
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except Exception:  # pragma: no cover - best effort in workers
        pass


def _trial_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key)))


def gen_separated_freqs(k: int, delta_f: float, rng) -> np.ndarray:
    """k frequencies on the unit circle with pairwise circular separation >= delta_f.

    Rejection sampling from the uniform distribution; after 10^4 rejected
    draws, falls back to a spacing transform (mandatory gaps plus uniform
    simplex slack, randomly rotated), which preserves the constraint by
    construction.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if delta_f < 0 or k * delta_f >= 1.0:
        raise ValueError(f"infeasible separation: k*delta_f = {k * delta_f} >= 1")
    if k == 1:
        return rng.uniform(size=1)
    for _ in range(10_000):
        f = np.sort(rng.uniform(size=k))
        gaps = np.diff(f, append=f[0] + 1.0)
        if gaps.min() >= delta_f:
            return f
    # spacing transform: distribute the slack 1 - k*delta_f over k gaps
    slack = rng.dirichlet(np.ones(k)) * (1.0 - k * delta_f)
    f = np.cumsum(delta_f + slack) - (delta_f + slack[0]) + rng.uniform()
    return np.sort(np.mod(f, 1.0))


def _random_instance(rng, n, m, k, delta_f, l):
    freqs = gen_separated_freqs(k, delta_f, rng)
    coeffs = (rng.standard_normal((k, l)) + 1j * rng.standard_normal((k, l))) / np.sqrt(2.0)
    spec = LineSpectrum(freqs=freqs, coeffs=coeffs)
    full = synthesize(spec, n)
    omega = np.sort(rng.choice(n, size=m, replace=False))
    obs = ObservationSet(n, omega, full[omega, :], eta=0.0)
    return spec, full, obs


def _score(signal, freqs, full, true_freqs, threshold, wall, iterations, converged):
    sig = signal_rel_mse(signal, full) if signal is not None else float("inf")
    f_mse = freq_mse(freqs, true_freqs)
    return TrialOutcome(
        signal_rel_mse=sig,
        freq_mse=f_mse,
        success=is_success(sig, f_mse, threshold),
        wall_time=wall,
        iterations=iterations,
        converged=converged,
    )


def _phase_trial(args):
    (seed, cell_idx, trial_idx, n, m, k, delta_f, l, threshold,
     detect_tol, ram_cfg, admm_cfg) = args
    _limit_blas_threads()
    rng = _trial_rng(seed, cell_idx, trial_idx)
    spec, full, obs = _random_instance(rng, n, m, k, delta_f, l)

    t0 = time.perf_counter()
    anm = anm_solve(obs, admm_cfg, rank_tol=detect_tol)
    t1 = time.perf_counter()
    anm_out = _score(anm.signal, anm.freqs, full, spec.freqs, threshold,
                     t1 - t0, anm.solution.iterations, anm.solution.converged)

    ram_cfg = replace(ram_cfg, rank_tol=min(ram_cfg.rank_tol, detect_tol))
    t2 = time.perf_counter()
    rep = ram_solve(obs, ram_cfg, admm_cfg)
    t3 = time.perf_counter()
    ram_out = _score(rep.signal, rep.freqs, full, spec.freqs, threshold,
                     t3 - t2, sum(it.inner_iterations for it in rep.iterations),
                     rep.converged)
    return cell_idx, trial_idx, anm_out, ram_out


def _pool(workers):
    return ProcessPoolExecutor(max_workers=workers, initializer=_limit_blas_threads)


def run_phase(cfg: ExperimentConfig, resume: bool = True):
    """Sparsity-separation sweep: ANM vs RAM success rates per (K, delta_f) cell.

    Writes cells.csv (one row per completed cell, appended as soon as the
    cell finishes) and trials.csv; an interrupted run resumes at the first
    missing cell with identical results.
    """
    out = os.path.join(cfg.out_dir, "phase")
    os.makedirs(out, exist_ok=True)
    cells_path = os.path.join(out, "cells.csv")
    trials_path = os.path.join(out, "trials.csv")
    serialize.write_meta(out, cfg.to_dict(), experiment="phase")

    done = set()
    if resume and os.path.exists(cells_path):
        import csv as _csv

        with open(cells_path) as fh:
            for row in _csv.DictReader(fh):
                done.add((int(row["k"]), float(row["delta_f"])))
    elif os.path.exists(cells_path):
        os.remove(cells_path)
        if os.path.exists(trials_path):
            os.remove(trials_path)

    # timings live in a sidecar: the scientific outputs stay byte-identical
    # across reruns and worker counts
    timings_path = os.path.join(out, "timings.csv")
    cell_header = ["k", "delta_f", "delta_f_times_n", "trials", "anm_successes",
                   "ram_successes", "anm_rate", "ram_rate"]
    trial_header = ["k", "delta_f", "trial", "method", "signal_rel_mse", "freq_mse",
                    "success", "iterations", "converged"]
    timing_header = ["k", "delta_f", "trial", "method", "wall_time"]
    results = []
    grid = [(k, sf / cfg.n) for k in cfg.k_values for sf in cfg.sep_factors]
    with _pool(cfg.workers()) as pool:
        for cell_idx, (k, delta_f) in enumerate(grid):
            if (k, delta_f) in done:
                log.info("phase cell k=%d delta_f=%.6f already done, skipping", k, delta_f)
                continue
            t0 = time.perf_counter()
            args = [
                (cfg.seed, cell_idx, t, cfg.n, cfg.m, k, delta_f, cfg.l,
                 cfg.success_threshold, cfg.detect_rank_tol, cfg.ram, cfg.admm)
                for t in range(cfg.trials)
            ]
            outcomes = list(pool.map(_phase_trial, args))
            outcomes.sort(key=lambda r: r[1])
            anm_s = sum(o[2].success for o in outcomes)
            ram_s = sum(o[3].success for o in outcomes)
            wall = time.perf_counter() - t0
            cell = PhaseCell(k, delta_f, cfg.trials, anm_s, ram_s,
                             anm_s / cfg.trials, ram_s / cfg.trials, wall)
            results.append(cell)
            trial_rows = []
            timing_rows = []
            for _, t, anm_out, ram_out in outcomes:
                for name, o in (("anm", anm_out), ("ram", ram_out)):
                    trial_rows.append([k, delta_f, t, name, o.signal_rel_mse, o.freq_mse,
                                       o.success, o.iterations, o.converged])
                    timing_rows.append([k, delta_f, t, name, o.wall_time])
            serialize.append_table_rows(trials_path, trial_header, trial_rows)
            serialize.append_table_rows(timings_path, timing_header, timing_rows)
            serialize.append_table_rows(cells_path, cell_header, [[
                cell.k, cell.delta_f, cell.delta_f * cfg.n, cell.trials,
                cell.anm_successes, cell.ram_successes, cell.anm_rate,
                cell.ram_rate,
            ]])
            log.info("phase cell k=%d delta_f*N=%.2f: anm %d/%d ram %d/%d (%.1fs)",
                     k, delta_f * cfg.n, anm_s, cfg.trials, ram_s, cfg.trials, wall)
    return results


def _doa_instance(rng, cfg):
    n, l = cfg.n, cfg.l
    freqs = np.asarray(cfg.doa_freqs, dtype=float)
    powers = np.asarray(cfg.doa_powers, dtype=float)
    coeffs = (rng.standard_normal((freqs.size, l)) + 1j * rng.standard_normal((freqs.size, l)))
    coeffs *= np.sqrt(powers / 2.0)[:, None]
    if cfg.coherent:
        # source 3 fully correlated with source 1, power preserved
        coeffs[2] = np.sqrt(powers[2] / powers[0]) * coeffs[0]
    spec = LineSpectrum(freqs=freqs, coeffs=coeffs)
    full = synthesize(spec, n)
    omega = np.asarray(cfg.omega if cfg.omega is not None else DOA_OMEGA_ONE_BASED, dtype=int) - 1
    obs = sample(full, omega, noise_sigma=cfg.noise_sigma, rng=rng)
    eta = noise_bound(omega.size, l, cfg.noise_sigma)
    return spec, ObservationSet(n, omega, obs.samples, eta=eta)


def _doa_run(args):
    seed, run_idx, cfg = args
    _limit_blas_threads()
    rng = _trial_rng(seed, 1 if cfg.coherent else 0, run_idx)
    spec, obs = _doa_instance(rng, cfg)
    true_freqs = np.asarray(cfg.doa_freqs)
    k = true_freqs.size

    spec_music = music_spectrum(obs, k=k, grid_size=cfg.music_grid)
    music_peaks, music_shortfall = pick_peaks(spec_music, k)
    # the two closest true sources are the resolution test pair
    pair_idx = np.argsort([min(circular_distance(f, np.delete(true_freqs, i)))
                           for i, f in enumerate(true_freqs)])[:2]
    pair = true_freqs[np.sort(pair_idx)]
    resolved = bool(music_peaks.size) and all(
        np.any(circular_distance(music_peaks, f) <= cfg.freq_tol) for f in pair
    )
    # a coherent miss: no local maximum near the first source above the median level
    peaks_all, _ = pick_peaks(spec_music, k=spec_music.values.size)
    has_peak_near = np.any(
        (circular_distance(peaks_all, true_freqs[0]) <= 2 * cfg.freq_tol)
        & (np.interp(peaks_all, spec_music.grid, spec_music.values) > np.median(spec_music.values))
    ) if peaks_all.size else False

    t0 = time.perf_counter()
    anm = anm_solve(obs, cfg.admm, rank_tol=cfg.ram.rank_tol, recover_signal=False)
    t1 = time.perf_counter()
    rep = ram_solve(obs, cfg.ram, cfg.admm, recover_signal=False)
    t2 = time.perf_counter()

    def detect(freqs):
        if freqs.size != k:
            return False
        return bool(np.all(np.sort(circular_distance(np.sort(freqs), np.sort(true_freqs))) <= cfg.freq_tol))

    row = {
        "run": run_idx,
        "case": "coherent" if cfg.coherent else "uncorrelated",
        "music_resolved_pair": resolved,
        "music_has_peak_near_f1": has_peak_near,
        "music_shortfall": music_shortfall,
        "anm_detected": anm.freqs.size,
        "anm_ok": detect(anm.freqs),
        "ram_detected": rep.freqs.size,
        "ram_ok": detect(rep.freqs),
        "ram_outer_iters": len(rep.iterations),
    }
    timing = {"run": run_idx, "anm_time": t1 - t0, "ram_time": t2 - t1}
    detail = {
        "music_peaks": music_peaks,
        "ram_freqs": rep.freqs,
        "ram_powers": rep.powers,
        "anm_freqs": anm.freqs,
        "music_spectrum": spec_music,
    }
    return run_idx, row, detail, timing


def run_doa(cfg: ExperimentConfig):
    """Direction-of-arrival comparison on the sparse array: MUSIC vs ANM vs RAM."""
    case = "coherent" if cfg.coherent else "uncorrelated"
    out = os.path.join(cfg.out_dir, "doa", case)
    os.makedirs(os.path.join(out, "music_spectra"), exist_ok=True)
    serialize.write_meta(out, cfg.to_dict(), experiment="doa", case=case)

    header = ["run", "case", "music_resolved_pair", "music_has_peak_near_f1",
              "music_shortfall", "anm_detected", "anm_ok", "ram_detected", "ram_ok",
              "ram_outer_iters"]
    rows = []
    freq_rows = []
    timing_rows = []
    with _pool(cfg.workers()) as pool:
        args = [(cfg.seed, r, cfg) for r in range(cfg.runs)]
        for run_idx, row, detail, timing in sorted(pool.map(_doa_run, args), key=lambda r: r[0]):
            rows.append([row[h] for h in header])
            timing_rows.append([timing["run"], timing["anm_time"], timing["ram_time"]])
            for name in ("ram", "anm"):
                freqs = detail[f"{name}_freqs"]
                powers = detail.get("ram_powers") if name == "ram" else None
                for i, f in enumerate(freqs):
                    freq_rows.append([run_idx, case, name, f,
                                      powers[i] if powers is not None and i < len(powers) else ""])
            detail["music_spectrum"].save_csv(
                os.path.join(out, "music_spectra", f"run_{run_idx:03d}.csv"))
    serialize.write_table(os.path.join(out, f"runs.{cfg.table_format}"), header, rows,
                          cfg.table_format)
    serialize.write_table(os.path.join(out, "recovered_freqs.csv"),
                          ["run", "case", "method", "freq", "power"], freq_rows)
    serialize.write_table(os.path.join(out, "timings.csv"),
                          ["run", "anm_time", "ram_time"], timing_rows)
    return rows


def run_illustrative(cfg: ExperimentConfig):
    """Single-instance trace: eigenvalues, spectra and weighting functions per iteration."""
    out = os.path.join(cfg.out_dir, "illustrative")
    os.makedirs(out, exist_ok=True)
    serialize.write_meta(out, cfg.to_dict(), experiment="illustrative")

    rng = _trial_rng(cfg.seed, 0, 0)
    freqs = np.asarray(cfg.freqs, dtype=float)
    coeffs = (rng.standard_normal((freqs.size, cfg.l))
              + 1j * rng.standard_normal((freqs.size, cfg.l))) / np.sqrt(2.0)
    spec = LineSpectrum(freqs=freqs, coeffs=coeffs)
    full = synthesize(spec, cfg.n)
    if cfg.omega is not None:
        omega = np.asarray(cfg.omega, dtype=int) - 1
    else:
        omega = np.sort(rng.choice(cfg.n, size=cfg.m, replace=False))
    obs = ObservationSet(cfg.n, omega, full[omega, :], eta=0.0)

    report = ram_solve(obs, cfg.ram, cfg.admm, reference=spec)
    doc = serialize.ram_report_to_dict(report)
    doc["true_freqs"] = freqs
    doc["omega"] = (omega + 1).tolist()
    serialize.save_json(os.path.join(out, "report.json"), doc)

    # per-iteration recovered spectra and the weighting functions that produced them
    grid = np.arange(cfg.weight_grid) / cfg.weight_grid
    spectra_rows = []
    weight_rows = []
    from .ram import scale_observations

    scaled, _, _ = scale_observations(obs)
    prev_u = np.zeros(cfg.n, dtype=complex)
    for it in report.iterations:
        for f, p in zip(it.freqs, it.powers):
            spectra_rows.append([it.index, f, p])
        if cfg.ram.init_mode == "capon" and it.index == 1:
            w_mat = capon_weight(scaled, it.eps)
        else:
            w_mat = weight_update(prev_u, it.eps)
        w_f = weighting_function(w_mat, grid)
        weight_rows.extend([[it.index, g, w] for g, w in zip(grid, w_f)])
        prev_u = it.u
    serialize.write_table(os.path.join(out, "spectra.csv"),
                          ["iteration", "freq", "power"], spectra_rows)
    serialize.write_table(os.path.join(out, "weights.csv"),
                          ["iteration", "freq", "w"], weight_rows)
    return report


def run_recover(cfg: ExperimentConfig):
    """Recover a spectrum from one dataset file and write spectrum.json."""
    if not cfg.input_path:
        raise ValueError("recover requires input_path pointing at a dataset file")
    obs = serialize.load_observations(cfg.input_path)
    out = os.path.join(cfg.out_dir, "recover")
    os.makedirs(out, exist_ok=True)
    serialize.write_meta(out, cfg.to_dict(), experiment="recover")
    report = ram_solve(obs, cfg.ram, cfg.admm, recover_signal=cfg.recover_signal)
    doc = serialize.ram_report_to_dict(report)
    serialize.save_json(os.path.join(out, "spectrum.json"), doc)
    return report
