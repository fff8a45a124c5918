"""ADMM solver for the weighted trace-penalized SDP.

The problem, for a Hermitian PSD weight W and data-consistency set
S = {Y : ||Y_Omega - Y_Omega^o||_F <= eta}, is

    minimize    tr(W T(u)) + tr(X)
    subject to  [[X, Y^H], [Y, T(u)]] >= 0,   Y in S,

split for ADMM by introducing Q >= 0 equal to the block matrix
G(u, X, Y).  All three primal blocks have closed-form updates against the
augmented Lagrangian

    L = tr(W T(u)) + tr(X) + Re tr(Lam^H (Q - G)) + rho/2 ||Q - G||_F^2,

and the Q-update is a PSD cone projection via one Hermitian
eigendecomposition of order N + L per iteration.  The update formulas are
pinned down by a finite-difference gradient check in the test suite; they
are, with B = Q + Lam/rho,

    X  =  herm(B_X) - I/rho
    Y  =  B_Y with the Omega rows projected onto the eta-ball around Y^o
    u  =  diagonal-wise average of (B_T - W/rho), u[0] forced real.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .core import HermitianToeplitz, ObservationSet, toeplitz_adjoint

__all__ = [
    "SolverError",
    "WeightedSdpProblem",
    "AdmmConfig",
    "SdpSolution",
    "psd_project",
    "objective",
    "solve",
    "augmented_lagrangian",
    "assemble_block",
]


class SolverError(RuntimeError):
    """Inner solver failure (linear algebra breakdown, invalid problem state)."""


@dataclass(frozen=True)
class WeightedSdpProblem:
    """One weighted SDP instance: observations plus an N x N Hermitian PSD weight."""

    obs: ObservationSet
    weight: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=complex)
        n = self.obs.ambient_n
        if w.shape != (n, n):
            raise ValueError(f"weight must be {n} x {n}, got {w.shape}")
        herm_gap = np.linalg.norm(w - w.conj().T)
        if herm_gap > 1e-12 * max(1.0, np.linalg.norm(w)):
            raise ValueError(f"weight is not Hermitian (gap {herm_gap:.3e})")
        lam = np.linalg.eigvalsh(w)
        if lam[0] < -1e-8 * max(lam[-1], 1.0):
            raise ValueError(f"weight is not PSD (min eigenvalue {lam[0]:.3e})")
        object.__setattr__(self, "weight", w)

    @property
    def l_eff(self) -> int:
        return self.obs.l


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM knobs: penalty, residual-balancing adaptation, stopping rule.

    ``over_relax`` is the standard relaxation coefficient applied to the
    splitting-variable and multiplier updates (1.0 disables it; values
    around 1.6 typically cut the iteration count substantially).
    """

    rho0: float = 1.0
    adapt: bool = True
    adapt_mu: float = 10.0
    adapt_tau: float = 2.0
    max_iters: int = 100_000
    eps_abs: float = 1e-7
    eps_rel: float = 1e-6
    over_relax: float = 1.6
    trace_path: str | None = None

    def __post_init__(self):
        if min(self.rho0, self.adapt_mu, self.adapt_tau) <= 0:
            raise ValueError("rho0, adapt_mu, adapt_tau must be positive")
        if self.max_iters < 1 or min(self.eps_abs, self.eps_rel) <= 0:
            raise ValueError("max_iters, eps_abs, eps_rel must be positive")
        if not 1.0 <= self.over_relax < 2.0:
            raise ValueError("over_relax must lie in [1, 2)")


@dataclass(frozen=True)
class SdpSolution:
    """Optimizer triple (u, Y, X) with objective value and solver diagnostics.

    ``qmat`` and ``lam`` are the final splitting variable and multiplier,
    kept so a subsequent solve on a nearby problem can warm-start.
    """

    u: HermitianToeplitz
    y: np.ndarray
    x: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool
    rho: float
    qmat: np.ndarray | None = None
    lam: np.ndarray | None = None


def psd_project(m) -> np.ndarray:
    """Projection onto the PSD cone: eigenvalues clamped at zero.

    The input must be Hermitian (within 1e-10 relative); the projection is
    idempotent and Frobenius-optimal.
    """
    m = np.asarray(m, dtype=complex)
    gap = np.linalg.norm(m - m.conj().T)
    if gap > 1e-10 * max(1.0, np.linalg.norm(m)):
        raise ValueError(f"input is not Hermitian (gap {gap:.3e})")
    lam, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    pos = lam > 0
    out = (vec[:, pos] * lam[pos]) @ vec[:, pos].conj().T
    return 0.5 * (out + out.conj().T)


def objective(u, x, weight) -> float:
    """tr(W T(u)) + tr(X) as a real scalar (imaginary dirt discarded)."""
    u = np.asarray(u, dtype=complex)
    adj_w = toeplitz_adjoint(weight)
    return float(np.vdot(u, adj_w).real + np.trace(np.asarray(x)).real)


def assemble_block(x, y, u) -> np.ndarray:
    """The (L+N) x (L+N) block matrix [[X, Y^H], [Y, T(u)]]."""
    from .core import toeplitz_build

    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    l = x.shape[0]
    n = y.shape[0]
    g = np.empty((l + n, l + n), dtype=complex)
    g[:l, :l] = x
    g[l:, :l] = y
    g[:l, l:] = y.conj().T
    g[l:, l:] = toeplitz_build(u)
    return g


def augmented_lagrangian(problem, rho, u, x, y, q, lam) -> float:
    """Smooth part of the augmented Lagrangian (constraints excluded).

    Used by the finite-difference gradient check that validates the
    closed-form primal updates.
    """
    g = assemble_block(x, y, u)
    diff = q - g
    val = objective(u, x, problem.weight)
    val += np.vdot(lam, diff).real
    val += 0.5 * rho * np.linalg.norm(diff) ** 2
    return float(val)


def _project_ball(rows, center, eta):
    """Euclidean projection of the Omega block onto the eta-ball around center."""
    if eta == 0.0:
        return center.copy()
    delta = rows - center
    nrm = np.linalg.norm(delta)
    if nrm <= eta:
        return rows
    return center + (eta / nrm) * delta


def primal_update(problem, rho, b):
    """Closed-form joint minimizer of the augmented Lagrangian over (u, X, Y).

    ``b`` is Q + Lam/rho.  Returns (u, x, y) where the Omega rows of y are
    projected onto the data ball.
    """
    obs = problem.obs
    n, l = obs.ambient_n, obs.l
    bx = b[:l, :l]
    x = 0.5 * (bx + bx.conj().T)
    x[np.arange(l), np.arange(l)] -= 1.0 / rho
    x[np.arange(l), np.arange(l)] = x.diagonal().real

    y = 0.5 * (b[l:, :l] + b[:l, l:].conj().T)
    y[obs.omega, :] = _project_ball(y[obs.omega, :], obs.samples, obs.eta)

    mt = b[l:, l:] - problem.weight / rho
    u = _diag_average(mt)
    return u, x, y


def _diag_average(m):
    """Average each diagonal of m, folding the conjugate subdiagonal in."""
    n = m.shape[0]
    idx = np.arange(n)
    flat = (idx[None, :] - idx[:, None] + n - 1).ravel()
    sums = np.bincount(flat, weights=m.real.ravel(), minlength=2 * n - 1).astype(complex)
    sums += 1j * np.bincount(flat, weights=m.imag.ravel(), minlength=2 * n - 1)
    counts = n - np.arange(n)
    u = (sums[n - 1 :] + np.conj(sums[n - 1 :: -1])) / (2.0 * counts)
    u[0] = u[0].real
    return u


def _toeplitz_fill(u, out, cache):
    abs_idx, lower = cache
    t = u[abs_idx]
    np.conjugate(t, where=lower, out=t)
    np.fill_diagonal(t, u[0].real)
    out[:, :] = t


def solve(problem: WeightedSdpProblem, cfg: AdmmConfig | None = None,
          warm_start: SdpSolution | None = None) -> SdpSolution:
    """Run ADMM on the weighted SDP until the residual stopping rule or max_iters.

    Stopping: ||Q - G||_F <= sqrt(dim) eps_abs + eps_rel max(||Q||, ||G||)
    and rho ||Q_k - Q_{k-1}||_F <= sqrt(dim) eps_abs + eps_rel ||Lam||_F.
    Residual balancing multiplies/divides rho by adapt_tau when one residual
    exceeds adapt_mu times the other.
    """
    if cfg is None:
        cfg = AdmmConfig()
    obs = problem.obs
    n, l = obs.ambient_n, obs.l
    dim = n + l
    sqrt_dim = np.sqrt(dim)
    w = problem.weight
    rho = float(cfg.rho0)

    idx = np.arange(n)
    abs_idx = np.abs(idx[None, :] - idx[:, None])
    lower = idx[None, :] < idx[:, None]
    t_cache = (abs_idx, lower)

    # The multiplier is stored scaled (lam_s = Lam / rho), so the splitting
    # update is mp = g_hat - lam_s, q = proj(mp), lam_s <- q - mp.
    g = np.zeros((dim, dim), dtype=complex)
    if warm_start is not None and warm_start.y.shape == (n, l):
        u = np.asarray(warm_start.u.u, dtype=complex).copy()
        x = np.asarray(warm_start.x, dtype=complex).copy()
        y = np.asarray(warm_start.y, dtype=complex).copy()
        y[obs.omega, :] = _project_ball(y[obs.omega, :], obs.samples, obs.eta)
        g[:l, :l] = x
        g[l:, :l] = y
        g[:l, l:] = y.conj().T
        _toeplitz_fill(u, g[l:, l:], t_cache)
        if warm_start.rho > 0:
            rho = float(warm_start.rho)
        if warm_start.qmat is not None and warm_start.qmat.shape == (dim, dim):
            q = warm_start.qmat.copy()
        else:
            q = psd_project(g)
        if warm_start.lam is not None and warm_start.lam.shape == (dim, dim):
            lam_s = warm_start.lam / rho
        else:
            lam_s = _dual_init(w, l) / rho
    else:
        y = np.zeros((n, l), dtype=complex)
        y[obs.omega, :] = _project_ball(y[obs.omega, :], obs.samples, obs.eta)
        g[l:, :l] = y
        g[:l, l:] = y.conj().T
        q = psd_project(g)
        lam_s = _dual_init(w, l) / rho

    adj_w = toeplitz_adjoint(w)
    w_over_rho = w / rho
    trace_rows = [] if cfg.trace_path else None
    alpha = cfg.over_relax
    converged = False
    primal_res = np.inf
    dual_res = np.inf
    u = np.zeros(n, dtype=complex)
    x = np.zeros((l, l), dtype=complex)
    n_pos = dim
    it = 0

    for it in range(1, cfg.max_iters + 1):
        b = q + lam_s
        u, x, y = _primal_update_fast(obs, b, w_over_rho, rho, l)

        g[:l, :l] = x
        g[l:, :l] = y
        g[:l, l:] = y.conj().T
        _toeplitz_fill(u, g[l:, l:], t_cache)

        if alpha != 1.0:
            mp = alpha * g + (1.0 - alpha) * q - lam_s
        else:
            mp = g - lam_s
        lam_eig, vec, n_pos = _eigh_positive(mp, n_pos, it, rho)
        q_prev = q
        if n_pos:
            q = (vec * lam_eig) @ vec.conj().T
        else:
            q = np.zeros_like(mp)
        np.subtract(q, mp, out=mp)  # mp now holds the new scaled multiplier
        lam_s = mp

        primal_res = float(np.linalg.norm(q - g))
        dual_res = float(rho * np.linalg.norm(q - q_prev))
        q_norm = float(np.linalg.norm(lam_eig))
        g_norm = float(np.linalg.norm(g))
        lam_norm = float(rho * np.linalg.norm(lam_s))
        eps_pri = sqrt_dim * cfg.eps_abs + cfg.eps_rel * max(q_norm, g_norm)
        eps_dual = sqrt_dim * cfg.eps_abs + cfg.eps_rel * lam_norm

        if trace_rows is not None:
            obj = float(np.vdot(u, adj_w).real + np.trace(x).real)
            trace_rows.append((it, obj, primal_res, dual_res, rho))

        if primal_res <= eps_pri and dual_res <= eps_dual:
            converged = True
            break

        if cfg.adapt:
            if primal_res > cfg.adapt_mu * dual_res:
                rho *= cfg.adapt_tau
                lam_s /= cfg.adapt_tau
                w_over_rho = w / rho
            elif dual_res > cfg.adapt_mu * primal_res:
                rho /= cfg.adapt_tau
                lam_s *= cfg.adapt_tau
                w_over_rho = w / rho

    obj = float(np.vdot(u, adj_w).real + np.trace(x).real)
    if trace_rows is not None:
        _write_trace(cfg.trace_path, trace_rows)

    q = 0.5 * (q + q.conj().T)
    lam_mat = rho * 0.5 * (lam_s + lam_s.conj().T)
    return SdpSolution(
        u=HermitianToeplitz(u),
        y=y,
        x=x,
        objective=obj,
        primal_residual=primal_res,
        dual_residual=dual_res,
        iterations=it,
        converged=converged,
        rho=rho,
        qmat=q,
        lam=lam_mat,
    )


def _eigh_positive(mp, n_pos_prev, it, rho):
    """Positive eigenpairs of Hermitian mp; full decomposition when many are positive.

    LAPACK reads a single triangle, so mp need not be exactly Hermitian.
    """
    dim = mp.shape[0]
    try:
        if 0 < n_pos_prev <= dim // 4:
            lam, vec = scipy.linalg.eigh(
                mp, check_finite=False, driver="evx", subset_by_value=(0.0, np.inf)
            )
            return lam, vec, lam.size
        lam, vec = scipy.linalg.eigh(mp, check_finite=False, driver="evd")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolverError(
            f"eigendecomposition failed at iteration {it} (rho={rho:.3e})"
        ) from exc
    pos = lam > 0.0
    return lam[pos], vec[:, pos], int(np.count_nonzero(pos))


def _primal_update_fast(obs, b, w_over_rho, rho, l):
    """Joint (u, X, Y) minimizer; same math as primal_update, fewer temporaries."""
    bx = b[:l, :l]
    x = 0.5 * (bx + bx.conj().T)
    idx = np.arange(l)
    x[idx, idx] = x.diagonal().real - 1.0 / rho

    y = 0.5 * (b[l:, :l] + b[:l, l:].conj().T)
    y[obs.omega, :] = _project_ball(y[obs.omega, :], obs.samples, obs.eta)

    mt = b[l:, l:] - w_over_rho
    u = _diag_average(mt)
    return u, x, y


def _dual_init(w, l):
    """Multiplier guess satisfying the dual linear constraints.

    The dual of the SDP fixes the X-block of the multiplier to the identity
    and the diagonal sums of its T-block to those of W; the block-diagonal
    [[I, 0], [0, W]] satisfies both exactly.
    """
    dim = l + w.shape[0]
    lam = np.zeros((dim, dim), dtype=complex)
    lam[np.arange(l), np.arange(l)] = 1.0
    lam[l:, l:] = w
    return lam


def _write_trace(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "primal_residual", "dual_residual", "rho"])
        writer.writerows(rows)
