"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Budget notes: the phase-transition sweep (criterion 3) dominates the
runtime; everything else takes a few minutes combined.  All runs are
seeded and deterministic.
"""

import os
import time

import numpy as np
import pytest

from ramfreq.admm import AdmmConfig, WeightedSdpProblem, augmented_lagrangian, primal_update, psd_project, solve
from ramfreq.core import (
    LineSpectrum,
    ObservationSet,
    noise_bound,
    steering,
    steering_matrix,
    synthesize,
    toeplitz_adjoint,
    toeplitz_build,
)
from ramfreq.harness import ExperimentConfig, gen_separated_freqs, run_doa, run_phase
from ramfreq.metrics import circular_distance, freq_mse, signal_rel_mse
from ramfreq.oracles import grid_l21_oracle
from ramfreq.ram import (
    RamConfig,
    anm_solve,
    dimension_reduce,
    ram_solve,
    scale_observations,
    sparse_metric,
)
from ramfreq.vandermonde import decompose, numeric_rank

REPORT_LINES = []

ILLUSTRATIVE_FREQS = np.array([0.1, 0.108, 0.125, 0.2, 0.5])


def report(criterion, ok, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    REPORT_LINES.append(line)
    print(line, flush=True)
    assert ok, line


def illustrative_instance(seed):
    rng = np.random.default_rng(np.random.SeedSequence((424242, seed)))
    coeffs = (rng.standard_normal((5, 1)) + 1j * rng.standard_normal((5, 1))) / np.sqrt(2)
    spec = LineSpectrum(ILLUSTRATIVE_FREQS, coeffs)
    full = synthesize(spec, 64)
    omega = np.sort(rng.choice(64, size=30, replace=False))
    obs = ObservationSet(64, omega, full[omega, :], eta=0.0)
    return spec, full, obs


@pytest.fixture(scope="module")
def illustrative_runs():
    runs = []
    for seed in range(5):
        spec, full, obs = illustrative_instance(seed)
        t0 = time.perf_counter()
        rep = ram_solve(obs, RamConfig(), reference=spec)
        ram_wall = time.perf_counter() - t0
        anm = anm_solve(obs, AdmmConfig(max_iters=30000), rank_tol=1e-5)
        runs.append((spec, full, obs, rep, ram_wall, anm))
    return runs


def test_criterion_10_solver_unit_properties(rng):
    """ADMM gradient check, PSD projection idempotence, adjoint identity,
    Vandermonde round trip (criterion 10)."""
    n, l = 6, 2
    worst_grad = 0.0
    for _ in range(20):
        omega = np.sort(rng.choice(n, size=4, replace=False))
        obs = ObservationSet(n, omega,
                             rng.standard_normal((4, l)) + 1j * rng.standard_normal((4, l)),
                             eta=30.0)
        w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        problem = WeightedSdpProblem(obs, w @ w.conj().T / n)
        rho = float(rng.uniform(0.5, 4.0))
        q = rng.standard_normal((n + l, n + l)) + 1j * rng.standard_normal((n + l, n + l))
        q = q @ q.conj().T / (n + l)
        lam = rng.standard_normal((n + l, n + l)) + 1j * rng.standard_normal((n + l, n + l))
        lam = 0.5 * (lam + lam.conj().T)
        u, x, y = primal_update(problem, rho, q + lam / rho)

        def val(uu, xx, yy):
            return augmented_lagrangian(problem, rho, uu, xx, yy, q, lam)

        h = 1e-6
        scale = max(abs(val(u, x, y)), 1.0)
        for i in range(n):
            for step in (h, 1j * h):
                if i == 0 and step.imag:
                    continue
                du = np.zeros(n, dtype=complex)
                du[i] = step
                worst_grad = max(worst_grad, abs(
                    (val(u + du, x, y) - val(u - du, x, y)) / (2 * h)) / scale)
        dx = np.zeros((l, l), dtype=complex)
        dx[0, 1] += h
        dx[1, 0] += h
        worst_grad = max(worst_grad, abs((val(u, x + dx, y) - val(u, x - dx, y)) / (2 * h)) / scale)
        dy = np.zeros((n, l), dtype=complex)
        dy[int(rng.integers(n)), 0] = h
        worst_grad = max(worst_grad, abs((val(u, x, y + dy) - val(u, x, y - dy)) / (2 * h)) / scale)
    grad_ok = worst_grad < 1e-5

    m = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    m = 0.5 * (m + m.conj().T)
    p = psd_project(m)
    proj_ok = np.linalg.norm(psd_project(p) - p) < 1e-10 * max(1.0, np.linalg.norm(p))

    adj_ok = True
    for _ in range(100):
        u = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        u[0] = u[0].real
        mm = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        lhs = np.trace(toeplitz_build(u).conj().T @ mm).real
        rhs = np.vdot(u, toeplitz_adjoint(mm)).real
        adj_ok &= abs(lhs - rhs) < 1e-10 * max(1.0, np.linalg.norm(u) * np.linalg.norm(mm))

    vr_ok = True
    nn = 12
    for _ in range(10):
        r = int(rng.integers(1, nn // 2 + 1))
        freqs = gen_separated_freqs(r, 1.5 / nn, rng)
        powers = rng.uniform(0.5, 3.0, size=r)
        a = steering_matrix(freqs, nn)
        dec = decompose((a * powers) @ a.conj().T, 1e-8)
        vr_ok &= dec.freqs.size == r and np.max(np.abs(np.sort(dec.freqs) - np.sort(freqs))) < 1e-7

    report("10 solver unit properties", grad_ok and proj_ok and adj_ok and vr_ok,
           f"grad rel err {worst_grad:.2e}, psd idempotent {proj_ok}, "
           f"adjoint {adj_ok}, vandermonde {vr_ok}")


def test_criterion_5_large_eps_asymptotic():
    """Sparse metric tracks the atomic norm as eps -> inf (criterion 5)."""
    rng = np.random.default_rng(1111)
    eps = 1e6
    worst = 0.0
    cfg = AdmmConfig(eps_abs=1e-9, eps_rel=1e-8)
    for _ in range(5):
        y = (rng.standard_normal((8, 1)) + 1j * rng.standard_normal((8, 1))) / np.sqrt(2)
        res = sparse_metric(y, eps, cfg, max_mm_iters=40, rel_tol=1e-8)
        anm = anm_solve(ObservationSet(8, np.arange(8), y), cfg)
        g = res.value * np.sqrt(eps) / (2.0 * np.sqrt(8))
        worst = max(worst, abs(g / anm.atomic_norm - 1.0))
    report("5 eps->inf equivalent infinitesimals", worst < 0.05,
           f"max |g/||Y||_A - 1| = {worst:.4f} over 5 draws")


@pytest.fixture(scope="module")
def theorem2_ladder():
    rng = np.random.default_rng(2222)
    n, r = 8, 2
    f = np.array([0.15, 0.4])
    coeffs = (rng.standard_normal((2, 1)) + 1j * rng.standard_normal((2, 1))) / np.sqrt(2)
    y = synthesize(LineSpectrum(f, coeffs), n)
    cfg = AdmmConfig(eps_abs=1e-8, eps_rel=1e-7, max_iters=2000)
    results = {}
    u0 = None
    for eps in (1e-4, 1e-6, 1e-8):
        res = sparse_metric(y, eps, cfg, max_mm_iters=25, rel_tol=1e-5, u0=u0)
        u0 = res.u
        results[eps] = res
    return n, r, results


def test_criterion_6_small_eps_value(theorem2_ladder):
    """M^eps ~ (r - N) ln(1/eps) as eps -> 0 (criterion 6, value part).

    The reference derivation states the equivalent-infinities form with
    ln(1/eps); measured values are negative, matching that sign.
    """
    n, r, results = theorem2_ladder
    res = results[1e-8]
    m_eps = res.value + n * np.log(1e-8)
    ratio = m_eps / ((r - n) * np.log(1e8))
    report("6a eps->0 equivalent infinities", abs(ratio - 1.0) < 0.10,
           f"M^eps/((r-N) ln(1/eps)) = {ratio:.4f} at eps=1e-8")


def test_criterion_6_small_eigenvalue_slope(theorem2_ladder):
    """Trailing eigenvalues of T(u*_eps) vs eps: log-log slope 1 +- 0.2 as stated.

    Known to be unattainable as written: at these eps the optimizer's
    trailing eigenvalues are exactly zero (the 'either zero' branch of the
    asymptotic statement, also reported in the reference experiments), so
    the measured slope is that of numerical noise.  See the decisions
    ledger; the bound lambda_small <= C * eps that the theory does give is
    asserted in test_criterion_6_small_eigenvalue_bound.
    """
    n, r, results = theorem2_ladder
    eps_values = np.array([1e-4, 1e-6, 1e-8])
    lam_small = np.array([max(results[e].eigenvalues[r:].max(), 1e-300) for e in eps_values])
    slope = np.polyfit(np.log(eps_values), np.log(lam_small), 1)[0]
    report("6b trailing-eigenvalue log-log slope", 0.8 <= slope <= 1.2,
           f"slope = {slope:.3f}, lambda_small = {lam_small}")


def test_criterion_6_small_eigenvalue_bound(theorem2_ladder):
    """The provable form of the same statement: lambda_small <= C eps with small C."""
    n, r, results = theorem2_ladder
    worst = max(results[e].eigenvalues[r:].max() / e for e in (1e-4, 1e-6, 1e-8))
    report("6c trailing eigenvalues O(eps) bound", worst < 1.0,
           f"max lambda_small/eps = {worst:.2e}")


def test_criterion_7_sdp_matches_grid_oracle():
    """ANM objective equals the fine-grid l2,1 oracle within 1% (criterion 7)."""
    rng = np.random.default_rng(3333)
    n, g = 16, 2**14
    worst = 0.0
    for i in range(10):
        g1 = int(rng.integers(0, g))
        g2 = int((g1 + rng.integers(int(0.2 * g), int(0.8 * g))) % g)
        freqs = np.sort(np.array([g1, g2]) / g)
        coeffs = (rng.standard_normal((2, 1)) + 1j * rng.standard_normal((2, 1))) / np.sqrt(2)
        y = synthesize(LineSpectrum(freqs, coeffs), n)
        obs = ObservationSet(n, np.arange(n), y)
        anm = anm_solve(obs, AdmmConfig(eps_abs=1e-8, eps_rel=1e-7))
        oracle_obj, _ = grid_l21_oracle(obs, grid_size=g)
        worst = max(worst, abs(anm.atomic_norm - oracle_obj) / oracle_obj)
    # single-atom closed form
    s = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    s *= 3.0 / np.linalg.norm(s)
    y1 = np.outer(steering(float(rng.uniform()), n), s)
    anm1 = anm_solve(ObservationSet(n, np.arange(n), y1), AdmmConfig(eps_abs=1e-8, eps_rel=1e-7))
    single_err = abs(anm1.atomic_norm - 3.0)
    report("7 SDP vs independent grid oracle", worst < 0.01 and single_err < 1e-3,
           f"max rel gap {worst:.2e} over 10 instances; single-atom err {single_err:.2e}")


def test_criterion_8_dimension_reduction():
    """Snapshot reduction leaves u* unchanged and cuts wall time (criterion 8)."""
    rng = np.random.default_rng(4444)
    n, m, l = 16, 8, 50
    freqs = gen_separated_freqs(3, 2.0 / n, rng)
    coeffs = (rng.standard_normal((3, l)) + 1j * rng.standard_normal((3, l))) / np.sqrt(2)
    full = synthesize(LineSpectrum(freqs, coeffs), n)
    omega = np.sort(rng.choice(n, size=m, replace=False))
    obs = ObservationSet(n, omega, full[omega, :], eta=0.0)
    scaled, _, _ = scale_observations(obs)
    reduced, _ = dimension_reduce(scaled)
    weight = np.eye(n) / n
    cfg = AdmmConfig(eps_abs=1e-9, eps_rel=1e-8)
    t0 = time.perf_counter()
    s_full = solve(WeightedSdpProblem(scaled, weight), cfg)
    t_full = time.perf_counter() - t0
    t0 = time.perf_counter()
    s_red = solve(WeightedSdpProblem(reduced, weight), cfg)
    t_red = time.perf_counter() - t0
    rel = np.linalg.norm(s_full.u.u - s_red.u.u) / np.linalg.norm(s_full.u.u)
    report("8 dimension-reduction invariance", rel <= 1e-6 and t_red <= 0.5 * t_full,
           f"u gap {rel:.2e}; wall {t_red:.2f}s reduced vs {t_full:.2f}s full "
           f"(L_eff={reduced.l})")


def test_criterion_1_illustrative_recovery(illustrative_runs):
    """Reference scenario over 5 seeds: <= 8 outer iterations, rank 5,
    frequencies to 1e-6, signal rel-MSE <= 1e-8 (criterion 1)."""
    ok = True
    details = []
    for seed, (spec, full, obs, rep, wall, _) in enumerate(illustrative_runs):
        lam = rep.iterations[-1].eigenvalues
        rank = numeric_rank(lam, 1e-8)
        ferr = (np.max(np.abs(np.sort(rep.freqs) - ILLUSTRATIVE_FREQS))
                if rep.freqs.size == 5 else np.inf)
        mse = signal_rel_mse(rep.signal, full)
        seed_ok = (len(rep.iterations) <= 8 and rank == 5 and ferr <= 1e-6
                   and mse <= 1e-8 and wall <= 600.0)
        ok &= seed_ok
        details.append(f"seed{seed}: outer={len(rep.iterations)} rank={rank} "
                       f"ferr={ferr:.1e} mse={mse:.1e} {wall:.1f}s")
    report("1 illustrative recovery (5 seeds)", ok, "; ".join(details))


def test_criterion_2_anm_fails_where_ram_succeeds(illustrative_runs):
    """Single-solve ANM leaves the close pair unresolved on >= 4/5 seeds."""
    failures = 0
    details = []
    for seed, (spec, full, obs, rep, wall, anm) in enumerate(illustrative_runs):
        fmse = freq_mse(anm.freqs, ILLUSTRATIVE_FREQS)
        failed = anm.freqs.size != 5 or fmse > 1e-8
        failures += failed
        details.append(f"seed{seed}: K={anm.freqs.size} fmse={fmse:.1e}")
    report("2 ANM failure on the close pair", failures >= 4,
           f"{failures}/5 seeds failed; " + "; ".join(details))


def test_criterion_4_mmv_improvement():
    """Success rate at K=8, sep=0.5/N does not drop when L grows to 5."""
    rng_master = 5555
    rates = {}
    for l in (1, 5):
        successes = 0
        for t in range(10):
            rng = np.random.default_rng(np.random.SeedSequence((rng_master, l, t)))
            freqs = gen_separated_freqs(8, 0.5 / 64, rng)
            coeffs = (rng.standard_normal((8, l)) + 1j * rng.standard_normal((8, l))) / np.sqrt(2)
            spec = LineSpectrum(freqs, coeffs)
            full = synthesize(spec, 64)
            omega = np.sort(rng.choice(64, size=30, replace=False))
            obs = ObservationSet(64, omega, full[omega, :])
            rep = ram_solve(obs, RamConfig(rank_tol=1e-8))
            mse = signal_rel_mse(rep.signal, full)
            successes += mse < 1e-10 and freq_mse(rep.freqs, freqs) < 1e-10
        rates[l] = successes / 10.0
    report("4 MMV improvement", rates[5] >= rates[1],
           f"RAM success rate L=5: {rates[5]:.2f} vs L=1: {rates[1]:.2f}")


def test_criterion_9_doa(tmp_path):
    """Sparse-array DOA: RAM finds all four sources; MUSIC shows the
    documented failure modes (criterion 9)."""
    t0 = time.perf_counter()
    base = dict(
        kind="doa", seed=77, n=20, m=10, l=200, noise_sigma=1.0, runs=20,
        threads=0, out_dir=str(tmp_path),
        ram=RamConfig(init_mode="capon", max_outer_iters=10, rank_tol=1e-3),
        admm=AdmmConfig(eps_abs=1e-6, eps_rel=1e-5, max_iters=30000),
    )
    results = {}
    for coherent in (False, True):
        cfg = ExperimentConfig(**{**base, "coherent": coherent})
        rows = run_doa(cfg)
        header = ["run", "case", "music_resolved_pair", "music_has_peak_near_f1",
                  "music_shortfall", "anm_detected", "anm_ok", "ram_detected",
                  "ram_ok", "ram_outer_iters"]
        results[coherent] = [dict(zip(header, r)) for r in rows]
    wall = time.perf_counter() - t0

    ram_uncorr = np.mean([r["ram_ok"] for r in results[False]])
    ram_coh = np.mean([r["ram_ok"] for r in results[True]])
    music_failures = sum(not r["music_resolved_pair"] for r in results[False])
    music_failures += sum(not r["music_has_peak_near_f1"] for r in results[True])
    music_rate = music_failures / 40.0
    ok = ram_uncorr >= 0.8 and ram_coh >= 0.8 and music_rate >= 0.3 and wall <= 7200
    report("9 DOA simulation", ok,
           f"RAM ok: uncorr {ram_uncorr:.2f}, coherent {ram_coh:.2f}; "
           f"MUSIC failure rate {music_rate:.2f}; wall {wall:.0f}s")


def test_criterion_3_phase_transition(tmp_path):
    """6x6 sparsity-separation sweep: RAM dominates ANM cellwise and is
    perfect in the easy region (criterion 3)."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        kind="phase", seed=99, out_dir=str(tmp_path), threads=0,
        admm=AdmmConfig(max_iters=30000),
    )
    cells = run_phase(cfg)
    wall = time.perf_counter() - t0
    dominated = sum(c.ram_rate >= c.anm_rate for c in cells)
    easy = [c for c in cells if c.k <= 4 and c.delta_f * cfg.n >= 1.0 - 1e-9]
    easy_perfect = all(c.ram_rate == 1.0 for c in easy)
    ok = dominated >= 0.95 * len(cells) and easy_perfect and wall <= 4 * 3600
    report("3 phase-transition dominance", ok,
           f"RAM >= ANM in {dominated}/{len(cells)} cells; "
           f"easy region perfect: {easy_perfect} ({len(easy)} cells); wall {wall:.0f}s")


def test_zz_write_acceptance_report(tmp_path_factory):
    path = os.path.join(os.path.dirname(__file__), "..", "acceptance_report.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(REPORT_LINES) + "\n")
    assert REPORT_LINES
