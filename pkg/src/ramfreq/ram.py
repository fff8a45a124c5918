"""Reweighted atomic-norm minimization: the outer majorize-minimize loop.

Each outer iteration solves the weighted SDP with

    W_j = (T(u_j) + eps_j I)^{-1},

which majorizes the nonconvex log-det sparse metric

    ln|T(u) + eps I| + tr(Y^H T(u)^{-1} Y)

at the current iterate, so the metric decreases monotonically at fixed
eps.  Following the reference recipe, measurements are first scaled so
||Y_Omega||_F^2 = M, eps starts at 1 and halves at every new iteration
until it reaches 2**-10 or drops below eta'^2/10, the snapshot dimension
is reduced to rank(Y_Omega) beforehand, and iteration 1 with u_0 = 0 is
plain ANM (up to a harmless uniform scaling of W).  A Capon-spectrum
initial weight is available for the many-snapshot regime.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import admm
from .admm import AdmmConfig, SdpSolution, SolverError, WeightedSdpProblem
from .core import (
    HermitianToeplitz,
    LineSpectrum,
    ObservationSet,
    steering_matrix,
    synthesize,
    toeplitz_build,
)
from .vandermonde import VandermondeDecomposition, decompose, recover_coefficients

__all__ = [
    "RamConfig",
    "RamIteration",
    "RamReport",
    "AnmResult",
    "SparseMetricResult",
    "scale_observations",
    "weight_update",
    "capon_weight",
    "dimension_reduce",
    "ram_solve",
    "anm_solve",
    "sparse_metric",
    "sparse_metric_value",
    "weighting_function",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RamConfig:
    """Outer-loop schedule and termination knobs.

    eps halves at the start of every new iteration until it reaches
    ``eps_floor_abs`` or falls below ``eps_floor_noise_factor * eta'^2``;
    the loop stops when the relative Frobenius change of Y* drops below
    ``rel_change_tol`` or after ``max_outer_iters`` iterations.  The first
    ``loose_outer_iters`` inner solves run at loosened tolerances for
    speed; termination is only assessed past that warm-up phase.

    With ``polish`` on (noiseless data only), every ADMM iterate is
    refined by solving the subproblem restricted to its identified rank-r
    face exactly (Gauss-Newton on the frequencies, closed-form powers);
    the refinement is kept only when it lowers the convex subproblem
    objective.  This recovers the accuracy an interior-point inner solver
    would give at a fraction of the cost; disable it to study the plain
    ADMM path.
    """

    eps0: float = 1.0
    eps_halving: bool = True
    eps_floor_abs: float = 2.0**-10
    eps_floor_noise_factor: float = 0.1
    max_outer_iters: int = 20
    rel_change_tol: float = 1e-6
    init_mode: str = "zero_u"
    rank_tol: float = 1e-8
    loose_outer_iters: int = 3
    loose_eps_abs: float = 1e-4
    loose_eps_rel: float = 1e-3
    polish: bool = True
    mid_eps_abs: float = 3e-5
    mid_eps_rel: float = 3e-4
    mid_max_iters: int = 20_000

    def __post_init__(self):
        if min(self.eps0, self.eps_floor_abs, self.rel_change_tol, self.rank_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.eps_floor_noise_factor < 0 or self.max_outer_iters < 1:
            raise ValueError("invalid schedule parameters")
        if self.init_mode not in ("zero_u", "capon"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass(frozen=True)
class RamIteration:
    """Trace of one outer iteration."""

    index: int
    eps: float
    objective: float
    eigenvalues: np.ndarray
    freqs: np.ndarray
    powers: np.ndarray
    rank: int
    rel_change: float
    inner_iterations: int
    inner_converged: bool
    u: np.ndarray
    signal_rel_mse: float | None = None


@dataclass
class RamReport:
    """Full run record: per-iteration traces plus the final spectrum estimate."""

    iterations: list[RamIteration]
    solution: SdpSolution | None
    freqs: np.ndarray
    powers: np.ndarray
    coeffs: np.ndarray | None
    signal: np.ndarray | None
    scale_factor: float
    eta_prime: float
    converged: bool
    init_mode: str
    ambient_n: int
    snapshots: int

    @property
    def rank(self) -> int:
        return self.freqs.size


@dataclass(frozen=True)
class AnmResult:
    """Atomic-norm minimization output on the original data scale."""

    solution: SdpSolution
    atomic_norm: float
    freqs: np.ndarray
    powers: np.ndarray
    signal: np.ndarray | None
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SparseMetricResult:
    """Fixed-data evaluation of the log-det sparse metric at one eps.

    ``value`` is the metric minus N ln(eps), computed in a rescaling of u
    that stays well conditioned for extreme eps.
    """

    value: float
    eps: float
    eigenvalues: np.ndarray
    quad_term: float
    mm_iterations: int
    u: np.ndarray


def scale_observations(obs: ObservationSet):
    """Rescale so the observed block has squared Frobenius norm M.

    Returns (scaled observations, scale factor c, eta') where the scaled
    samples are c * Y_Omega^o and eta' = c * eta; divide recovered
    quantities by c to undo.
    """
    nrm = np.linalg.norm(obs.samples)
    if nrm == 0.0:
        raise ValueError("cannot scale all-zero observations")
    c = float(np.sqrt(obs.m) / nrm)
    eta_prime = c * obs.eta
    scaled = ObservationSet(obs.ambient_n, obs.omega, obs.samples * c, eta_prime)
    return scaled, c, eta_prime


def weight_update(u, eps: float) -> np.ndarray:
    """Hermitian PSD weight (T(u) + eps I)^{-1} via eigendecomposition.

    Small negative eigenvalues of T(u) (solver dirt) are clamped to zero
    before inversion.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    u = np.asarray(getattr(u, "u", u), dtype=complex)
    lam, vec = np.linalg.eigh(toeplitz_build(u))
    lam = np.maximum(lam, 0.0)
    w = (vec * (1.0 / (lam + eps))) @ vec.conj().T
    return 0.5 * (w + w.conj().T)


def capon_weight(obs: ObservationSet, eps: float) -> np.ndarray:
    """Initial weight from the regularized sample covariance of the observed rows.

    W = Gamma^T ((1/L) Y Y^H + eps I)^{-1} Gamma, zero outside the
    Omega x Omega block; its weighting function is the Capon beamforming
    spectrum of the data.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    cov = obs.samples @ obs.samples.conj().T / obs.l
    lam, vec = np.linalg.eigh(0.5 * (cov + cov.conj().T))
    lam = np.maximum(lam, 0.0)
    block = (vec * (1.0 / (lam + eps))) @ vec.conj().T
    w = np.zeros((obs.ambient_n, obs.ambient_n), dtype=complex)
    w[np.ix_(obs.omega, obs.omega)] = 0.5 * (block + block.conj().T)
    return w


def dimension_reduce(obs: ObservationSet, recover_signal: bool = True):
    """Replace the L snapshots by rank(Y_Omega) <= min(M, L) equivalent columns.

    The reduced matrix U_r diag(s_r) from the thin SVD satisfies
    Ytilde Ytilde^H = Y_Omega Y_Omega^H, so the SDP optimizer u* is
    unchanged.  Returns (reduced observations, q1) where q1 maps the
    reduced solution Z back to the full one as Z @ q1^H; q1 is None when
    no reduction happened or when ``recover_signal`` is False (frequencies
    only, no back-map).
    """
    y = obs.samples
    m, l = y.shape
    if l == 1:
        return obs, None
    u_svd, s, vh = np.linalg.svd(y, full_matrices=False)
    tol = s[0] * max(m, l) * np.finfo(float).eps if s.size else 0.0
    r = max(int(np.count_nonzero(s > tol)), 1)
    if r == l:
        return obs, None
    reduced = ObservationSet(obs.ambient_n, obs.omega, u_svd[:, :r] * s[:r], obs.eta)
    q1 = vh[:r, :].conj().T if recover_signal else None
    return reduced, q1


def weighting_function(weight, freqs) -> np.ndarray:
    """Atom preference w(f) = 1 / sqrt(a(f)^H W a(f)) sampled at ``freqs``."""
    weight = np.asarray(weight, dtype=complex)
    a = steering_matrix(freqs, weight.shape[0])
    quad = np.einsum("nk,nk->k", a.conj(), weight @ a).real
    return 1.0 / np.sqrt(np.maximum(quad, np.finfo(float).tiny))


def sparse_metric_value(u, x, eps: float) -> float:
    """ln|T(u) + eps I| + tr(X), the metric at an iterate (X certifies the quadratic term)."""
    u = np.asarray(getattr(u, "u", u), dtype=complex)
    lam = np.maximum(np.linalg.eigvalsh(toeplitz_build(u)), 0.0)
    return float(np.sum(np.log(lam + eps)) + np.trace(np.atleast_2d(x)).real)


def _next_eps(eps, cfg: RamConfig, noise_floor: float) -> float:
    if not cfg.eps_halving:
        return eps
    if eps <= cfg.eps_floor_abs:
        return eps
    if noise_floor > 0.0 and eps < noise_floor:
        return eps
    return max(eps / 2.0, cfg.eps_floor_abs)


def _varpro_refine(freqs, obs: ObservationSet, max_steps: int = 40):
    """Gauss-Newton refinement of frequencies against the observed rows.

    Minimizes ||A_Omega(f) S(f) - Y||_F^2 with S eliminated by least
    squares (variable projection, Kaufman Jacobian).  Returns
    (freqs, coeffs, residual_norm); quadratically convergent near an
    exact-fit solution.
    """
    f = np.asarray(freqs, dtype=float).copy()
    y = obs.samples
    rows = obs.omega.astype(float)
    k = f.size

    def fit(fv):
        a = np.exp(2j * np.pi * np.outer(rows, fv))
        s, *_ = np.linalg.lstsq(a, y, rcond=None)
        return a, s, a @ s - y

    a, s, resid = fit(f)
    phi = np.linalg.norm(resid) ** 2
    for _ in range(max_steps):
        # Kaufman Jacobian: project atom derivatives off the model range
        da = (2j * np.pi * rows)[:, None] * a
        q, _ = np.linalg.qr(a)
        da_perp = da - q @ (q.conj().T @ da)
        jac = np.stack([np.outer(da_perp[:, i], np.ones(y.shape[1])) * s[i] for i in range(k)], axis=2)
        jmat = jac.reshape(-1, k)
        jr = np.concatenate([jmat.real, jmat.imag])
        rr = np.concatenate([resid.real.ravel(), resid.imag.ravel()])
        step, *_ = np.linalg.lstsq(jr, -rr, rcond=None)
        if not np.all(np.isfinite(step)):
            break
        damp = 1.0
        improved = False
        for _ in range(12):
            f_new = np.mod(f + damp * step, 1.0)
            a_new, s_new, resid_new = fit(f_new)
            phi_new = np.linalg.norm(resid_new) ** 2
            if phi_new < phi:
                f, a, s, resid, phi = f_new, a_new, s_new, resid_new, phi_new
                improved = True
                break
            damp *= 0.5
        if not improved or np.linalg.norm(step) * damp < 1e-14:
            break
    order = np.argsort(f)
    return f[order], s[order], float(np.sqrt(phi))


def _face_polish(sol: SdpSolution, obs: ObservationSet, weight, rank_gap: float = 1e-3):
    """Exact-recovery refinement of an iterate on its identified atomic support.

    For noiseless data, a K-atom representation fitting the observed rows
    exactly is unique whenever 2K <= M (generic sampling), so an exact fit
    reached by Gauss-Newton from the iterate's dominant atoms certifies
    the recovery.  The refined point carries the face-optimal powers
    p_k = ||s_k|| w(f_k) for the current weight (the subproblem objective
    restricted to rank-K Toeplitz matrices is 2 sum_k ||s_k|| / w(f_k) by
    the weighted-atomic-norm identity, minimized in closed form over p).
    Returns the refined SdpSolution, or None when no certified exact fit
    exists (noisy data, unresolved support, or K too large to identify).
    """
    if obs.eta != 0.0:
        return None
    n, l = obs.ambient_n, obs.l
    tmat = toeplitz_build(sol.u.u)
    lam = np.linalg.eigvalsh(tmat)[::-1]
    if lam[0] <= 0:
        return None
    r = int(np.count_nonzero(lam > rank_gap * lam[0]))
    if r == 0 or r >= min(obs.m, n):
        return None
    try:
        dec = _decompose_tolerant(tmat, rank_gap)
    except ValueError:
        return None
    if dec.freqs.size == 0 or dec.freqs.size >= obs.m:
        return None
    y_norm = np.linalg.norm(obs.samples)
    freqs, coeffs, resid = _varpro_refine(dec.freqs, obs)
    if resid > 1e-9 * y_norm:
        return None
    # prune near-zero atoms (overparameterized exact fits) and refit
    for _ in range(freqs.size):
        norms = np.linalg.norm(coeffs, axis=1)
        keep = norms > 1e-8 * norms.max()
        if keep.all() or not keep.any():
            break
        cand_f, cand_s, cand_resid = _varpro_refine(freqs[keep], obs)
        if cand_resid > 1e-9 * y_norm:
            break
        freqs, coeffs, resid = cand_f, cand_s, cand_resid
    norms = np.linalg.norm(coeffs, axis=1)
    if freqs.size == 0 or norms.min() <= 0 or 2 * freqs.size > obs.m:
        return None

    a_full = steering_matrix(freqs, n)
    quad = np.einsum("nk,nk->k", a_full.conj(), weight @ a_full).real
    quad = np.maximum(quad, np.finfo(float).tiny)
    powers = norms / np.sqrt(quad)
    # u for T = sum_k p_k a_k a_k^H: superdiagonal d carries p_k e^{-i 2 pi d f}
    d = np.arange(n)
    u = (np.exp(-2j * np.pi * np.outer(d, freqs)) * powers).sum(axis=1)
    y_full = a_full @ coeffs
    y_full[obs.omega, :] = obs.samples  # exact data consistency
    x = (coeffs.conj().T / powers) @ coeffs
    x = 0.5 * (x + x.conj().T)
    objective = float(np.dot(quad, powers) + np.trace(x).real)
    return SdpSolution(
        u=HermitianToeplitz(u),
        y=y_full,
        x=x,
        objective=objective,
        primal_residual=0.0,
        dual_residual=0.0,
        iterations=sol.iterations,
        converged=sol.converged,
        rho=sol.rho,
        qmat=None,
        lam=None,
    )


def _decompose_tolerant(tmat, rel_tol):
    """Decompose, clamping indefiniteness from loosely converged iterates."""
    try:
        return decompose(tmat, rel_tol)
    except ValueError:
        lam, vec = np.linalg.eigh(tmat)
        pos = lam > 0
        clamped = (vec[:, pos] * lam[pos]) @ vec[:, pos].conj().T
        return decompose(0.5 * (clamped + clamped.conj().T), rel_tol)


def _empty_report(obs, cfg, recover_signal):
    signal = np.zeros((obs.ambient_n, obs.l), dtype=complex) if recover_signal else None
    return RamReport(
        iterations=[],
        solution=None,
        freqs=np.empty(0),
        powers=np.empty(0),
        coeffs=np.zeros((0, obs.l), dtype=complex),
        signal=signal,
        scale_factor=1.0,
        eta_prime=obs.eta,
        converged=True,
        init_mode=cfg.init_mode,
        ambient_n=obs.ambient_n,
        snapshots=obs.l,
    )


def ram_solve(
    obs: ObservationSet,
    cfg: RamConfig | None = None,
    admm_cfg: AdmmConfig | None = None,
    reference: LineSpectrum | None = None,
    recover_signal: bool = True,
) -> RamReport:
    """Run the full reweighting loop and return the recovery report.

    ``reference`` is an optional ground-truth spectrum used purely to
    report the per-iteration signal MSE.  With ``recover_signal`` False the
    snapshot reduction drops the back-map (frequencies only).
    """
    cfg = cfg or RamConfig()
    admm_cfg = admm_cfg or AdmmConfig()
    if np.linalg.norm(obs.samples) == 0.0:
        return _empty_report(obs, cfg, recover_signal)

    scaled, c, eta_prime = scale_observations(obs)
    if cfg.init_mode == "capon":
        weight = capon_weight(scaled, cfg.eps0)
    else:
        weight = weight_update(np.zeros(obs.ambient_n), cfg.eps0)
    reduced, q1 = dimension_reduce(scaled, recover_signal)

    truth = synthesize(reference, obs.ambient_n) if reference is not None else None
    truth_energy = float(np.linalg.norm(truth) ** 2) if truth is not None else 0.0
    loose_cfg = replace(
        admm_cfg,
        eps_abs=max(admm_cfg.eps_abs, cfg.loose_eps_abs),
        eps_rel=max(admm_cfg.eps_rel, cfg.loose_eps_rel),
    )
    # When the face polish can deliver final accuracy (noiseless data), the
    # post-warm-up ADMM solves only localize the support and can stay at
    # moderate tolerance; otherwise the caller's config governs.
    polish_active = cfg.polish and eta_prime == 0.0
    if polish_active:
        mid_cfg = replace(
            admm_cfg,
            eps_abs=max(admm_cfg.eps_abs, cfg.mid_eps_abs),
            eps_rel=max(admm_cfg.eps_rel, cfg.mid_eps_rel),
            max_iters=min(admm_cfg.max_iters, cfg.mid_max_iters),
        )
    else:
        mid_cfg = admm_cfg

    eps = cfg.eps0
    noise_floor = cfg.eps_floor_noise_factor * eta_prime**2
    records: list[RamIteration] = []
    sol: SdpSolution | None = None
    prev_y = None
    prev_polished = False
    converged = False

    for j in range(1, cfg.max_outer_iters + 1):
        loose = j <= cfg.loose_outer_iters
        inner_cfg = loose_cfg if loose else mid_cfg
        problem = WeightedSdpProblem(reduced, weight)
        try:
            sol = admm.solve(problem, inner_cfg, warm_start=sol)
        except SolverError as exc:
            raise SolverError(f"outer iteration {j} (eps={eps:.3e}): {exc}") from exc
        is_polished = False
        if polish_active:
            polished = _face_polish(sol, reduced, weight)
            if polished is not None:
                sol = polished
                is_polished = True
        log.debug(
            "outer %d: eps=%.3e inner_iters=%d converged=%s obj=%.6e polished=%s",
            j, eps, sol.iterations, sol.converged, sol.objective, is_polished,
        )

        tmat = toeplitz_build(sol.u.u)
        eigenvalues = np.linalg.eigvalsh(tmat)[::-1]
        dec = _decompose_tolerant(tmat, cfg.rank_tol)
        rel_change = (
            float(np.linalg.norm(sol.y - prev_y) / max(np.linalg.norm(prev_y), 1e-300))
            if prev_y is not None
            else np.inf
        )
        mse = None
        if truth is not None and recover_signal:
            estimate = (sol.y @ q1.conj().T if q1 is not None else sol.y) / c
            mse = float(np.linalg.norm(estimate - truth) ** 2 / truth_energy)
        records.append(
            RamIteration(
                index=j,
                eps=eps,
                objective=sol.objective,
                eigenvalues=eigenvalues,
                freqs=dec.freqs,
                powers=dec.powers / c,
                rank=dec.rank,
                rel_change=rel_change,
                inner_iterations=sol.iterations,
                inner_converged=sol.converged,
                u=np.asarray(sol.u.u),
                signal_rel_mse=mse,
            )
        )
        prev_y = sol.y
        trusted = not loose or (is_polished and prev_polished)
        prev_polished = is_polished
        if trusted and rel_change < cfg.rel_change_tol:
            converged = True
            break
        if j < cfg.max_outer_iters:
            eps = _next_eps(eps, cfg, noise_floor)
            weight = weight_update(sol.u.u, eps)

    final = records[-1]
    freqs = final.freqs
    powers = final.powers
    coeffs = recover_coefficients(freqs, obs) if freqs.size <= obs.m else None
    signal = None
    if recover_signal:
        signal = (sol.y @ q1.conj().T if q1 is not None else sol.y) / c
    return RamReport(
        iterations=records,
        solution=sol,
        freqs=freqs,
        powers=powers,
        coeffs=coeffs,
        signal=signal,
        scale_factor=c,
        eta_prime=eta_prime,
        converged=converged,
        init_mode=cfg.init_mode,
        ambient_n=obs.ambient_n,
        snapshots=obs.l,
    )


def anm_solve(
    obs: ObservationSet,
    admm_cfg: AdmmConfig | None = None,
    rank_tol: float = 1e-8,
    recover_signal: bool = True,
) -> AnmResult:
    """Plain atomic-norm minimization: one weighted solve with W = I/N.

    The solver objective tr(T(u))/N + tr(X) equals twice the atomic norm at
    the optimum, so the reported ``atomic_norm`` is half the (de-scaled)
    objective.  Frequencies and powers are read off T(u*) on the original
    data scale.
    """
    admm_cfg = admm_cfg or AdmmConfig()
    n = obs.ambient_n
    if np.linalg.norm(obs.samples) == 0.0:
        sol = SdpSolution(
            u=HermitianToeplitz(np.zeros(n)),
            y=np.zeros((n, obs.l), dtype=complex),
            x=np.zeros((obs.l, obs.l), dtype=complex),
            objective=0.0,
            primal_residual=0.0,
            dual_residual=0.0,
            iterations=0,
            converged=True,
            rho=admm_cfg.rho0,
        )
        return AnmResult(sol, 0.0, np.empty(0), np.empty(0),
                         np.zeros((n, obs.l), dtype=complex), np.zeros(n))

    scaled, c, _ = scale_observations(obs)
    reduced, q1 = dimension_reduce(scaled, recover_signal)
    weight = np.eye(n, dtype=complex) / n
    sol = admm.solve(WeightedSdpProblem(reduced, weight), admm_cfg)
    tmat = toeplitz_build(sol.u.u)
    eigenvalues = np.linalg.eigvalsh(tmat)[::-1] / c
    dec = _decompose_tolerant(tmat, rank_tol)
    signal = None
    if recover_signal:
        signal = (sol.y @ q1.conj().T if q1 is not None else sol.y) / c
    return AnmResult(
        solution=sol,
        atomic_norm=float(sol.objective / (2.0 * c)),
        freqs=dec.freqs,
        powers=dec.powers / c,
        signal=signal,
        eigenvalues=eigenvalues,
    )


def sparse_metric(
    y,
    eps: float,
    admm_cfg: AdmmConfig | None = None,
    max_mm_iters: int = 60,
    rel_tol: float = 1e-11,
    u0=None,
) -> SparseMetricResult:
    """Evaluate the sparse metric of a fully observed matrix at fixed eps.

    Runs the majorize-minimize loop over u alone (Y is pinned by the
    constraint set {Y}) and returns the metric value minus N ln(eps).  To
    stay well conditioned at large eps the loop optimizes v = u / s with
    s = max(1, sqrt(eps)); the weighted SDP then carries
    W = s^2 (s T(v_j) + eps I)^{-1} and the value is recovered as

        sum_i ln(1 + s lam_i / eps) + tr(X)/s,

    with lam_i the eigenvalues of T(v*).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    admm_cfg = admm_cfg or AdmmConfig()
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if y.shape[1] > y.shape[0]:  # column-vector convention for 1-d input
        y = y.T
    n = y.shape[0]
    obs = ObservationSet(n, np.arange(n), y, eta=0.0)
    s = max(1.0, float(np.sqrt(eps)))

    v = np.zeros(n, dtype=complex) if u0 is None else np.asarray(u0, dtype=complex) / s
    sol = None
    value = np.inf
    quad = 0.0
    lam_v = np.zeros(n)
    it = 0
    for it in range(1, max_mm_iters + 1):
        lam, vec = np.linalg.eigh(toeplitz_build(v))
        lam = np.maximum(lam, 0.0)
        weight = (vec * (s**2 / (s * lam + eps))) @ vec.conj().T
        weight = 0.5 * (weight + weight.conj().T)
        # uniform weight scaling leaves the minimizer invariant up to the
        # analytic (u, X) rescale below; it keeps the solver well conditioned
        # when eps (and hence ||W||) is extreme
        s_w = float(np.trace(weight).real) / n
        sqrt_sw = np.sqrt(s_w)
        if sol is not None:
            # re-express the previous iterate in the new normalized variable;
            # Q and Lam drift slowly across reweights and carry over as-is
            sol = replace(sol, u=HermitianToeplitz(v * sqrt_sw), x=sol.x / sqrt_sw)
        sol = admm.solve(WeightedSdpProblem(obs, weight / s_w), admm_cfg, warm_start=sol)
        v = sol.u.u / sqrt_sw
        quad = float(np.trace(sol.x).real) * sqrt_sw / s
        lam_v = np.maximum(np.linalg.eigvalsh(toeplitz_build(v)), 0.0)[::-1]
        new_value = float(np.sum(np.log1p(s * lam_v / eps)) + quad)
        if abs(new_value - value) <= rel_tol * max(1.0, abs(new_value)):
            value = new_value
            break
        value = new_value
    result = SparseMetricResult(
        value=value,
        eps=eps,
        eigenvalues=s * lam_v,
        quad_term=quad,
        mm_iterations=it,
        u=s * v,
    )
    face = _metric_face_value(y, obs, s * v, eps)
    if face is not None and face.value < result.value:
        result = replace(face, mm_iterations=it)
    return result


def _metric_face_value(y, obs, u, eps):
    """Exact metric value restricted to the rank-r face of the current iterate.

    For exact-atom data the metric minimizer has its trailing eigenvalues
    at zero, so on the identified face the metric reduces to an r-variable
    smooth problem over the powers,

        sum_i ln(1 + lam_i(A diag(p) A^H)/eps) + sum_k ||s_k||^2 / p_k,

    minimized here over log-powers with its analytic gradient.  Returns a
    SparseMetricResult or None when the face is not certified (no exact
    fit or unidentifiable order).
    """
    import scipy.optimize

    n = y.shape[0]
    lam = np.linalg.eigvalsh(toeplitz_build(u))[::-1]
    if lam[0] <= 0:
        return None
    r = int(np.count_nonzero(lam > 1e-3 * lam[0]))
    if r == 0 or 2 * r > n:
        return None
    try:
        dec = _decompose_tolerant(toeplitz_build(u), 1e-3)
    except ValueError:
        return None
    if dec.freqs.size == 0:
        return None
    freqs, coeffs, resid = _varpro_refine(dec.freqs, obs)
    if resid > 1e-9 * np.linalg.norm(y) or 2 * freqs.size > n:
        return None
    norms_sq = np.linalg.norm(coeffs, axis=1) ** 2
    if norms_sq.min() <= 0:
        return None
    a = steering_matrix(freqs, n)

    def fun(logp):
        p = np.exp(logp)
        t = (a * p) @ a.conj().T
        lam_t, vec = np.linalg.eigh(0.5 * (t + t.conj().T))
        lam_t = np.maximum(lam_t, 0.0)
        val = float(np.sum(np.log1p(lam_t / eps)) + np.sum(norms_sq / p))
        inv = (vec * (1.0 / (lam_t + eps))) @ vec.conj().T
        grad_p = np.einsum("nk,nk->k", a.conj(), inv @ a).real - norms_sq / p**2
        return val, grad_p * p

    p0 = np.maximum(dec.powers[: freqs.size], norms_sq) if dec.powers.size >= freqs.size else norms_sq
    res = scipy.optimize.minimize(fun, np.log(p0), jac=True, method="L-BFGS-B",
                                  options={"maxiter": 200})
    p = np.exp(res.x)
    t = (a * p) @ a.conj().T
    lam_t = np.maximum(np.linalg.eigvalsh(0.5 * (t + t.conj().T)), 0.0)[::-1]
    value = float(np.sum(np.log1p(lam_t / eps)) + np.sum(norms_sq / p))
    d = np.arange(n)
    u_face = (np.exp(-2j * np.pi * np.outer(d, freqs)) * p).sum(axis=1)
    return SparseMetricResult(
        value=value,
        eps=eps,
        eigenvalues=lam_t,
        quad_term=float(np.sum(norms_sq / p)),
        mm_iterations=0,
        u=u_face,
    )
