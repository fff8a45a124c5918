"""Independent brute-force and fine-grid oracles used to validate the solvers.

These deliberately share no code with the ADMM path: the gridded l2,1
oracle is a Douglas-Rachford proximal iteration on coefficient space, and
the atomic-l0 oracle is exhaustive subset search.  Both are desk-scale
checks, not production solvers.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import ObservationSet, steering_matrix

__all__ = ["OracleError", "grid_l21_oracle", "atomic_l0_oracle"]


class OracleError(RuntimeError):
    """Oracle failed to converge or was asked to certify an infeasible fit."""


def grid_l21_oracle(
    obs: ObservationSet,
    grid_size: int = 2**14,
    exact_fit: bool | None = None,
    max_iters: int = 300_000,
    stall_tol: float = 1e-8,
    stall_iters: int = 100,
    gamma: float | None = None,
):
    """Fine-grid mixed-norm recovery: min sum_g ||S_g||_2 s.t. ||A_Omega S - b||_F <= eta.

    Solved by Douglas-Rachford splitting between the row-shrinkage prox of
    the l2,1 norm and the projection onto the data ball.  For a uniform
    grid with grid_size >= N the gridded operator is a tight frame
    (A_Omega A_Omega^H = grid_size * I), so the ball projection has the
    closed form S + A^H (proj(AS) - AS) / grid_size; the prox step
    parameter is set from that operator norm.  Runs until the objective
    stalls below ``stall_tol`` relative change for ``stall_iters``
    consecutive iterations; raises OracleError past ``max_iters``.

    Returns (objective value, indices of nonzero grid rows).
    """
    if grid_size < obs.ambient_n:
        raise ValueError("grid_size must be at least the ambient length")
    if exact_fit is None:
        exact_fit = obs.eta == 0.0
    if exact_fit and obs.eta != 0.0:
        raise ValueError("exact_fit requires eta = 0")
    b = obs.samples
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return 0.0, np.empty(0, dtype=int)

    grid = np.arange(grid_size) / grid_size
    a_omega = steering_matrix(grid, obs.ambient_n)[obs.omega, :]
    g = float(grid_size)
    eta = obs.eta

    def project_data(s):
        resid = a_omega @ s - b
        nrm = np.linalg.norm(resid)
        if nrm <= eta:
            return s
        scale = 1.0 if eta == 0.0 else (1.0 - eta / nrm)
        return s - a_omega.conj().T @ (scale * resid) / g

    def shrink(s, thresh):
        norms = np.linalg.norm(s, axis=1)
        factor = np.maximum(1.0 - thresh / np.maximum(norms, np.finfo(float).tiny), 0.0)
        return s * factor[:, None]

    if gamma is None:
        corr = np.linalg.norm(a_omega.conj().T @ b, axis=1)
        gamma = 0.5 * float(corr.max()) / g

    z = a_omega.conj().T @ b / g  # least-norm consistent start
    objective = np.inf
    stall = 0
    x = z
    y = z
    for _ in range(max_iters):
        x = shrink(z, gamma)
        y = project_data(2.0 * x - z)
        z = z + (y - x)
        # objective tracked at the feasible iterate y; convergence additionally
        # requires the two half-iterates to agree (x carries the sparsity)
        new_obj = float(np.sum(np.linalg.norm(y, axis=1)))
        gap = float(np.linalg.norm(x - y))
        if (
            abs(new_obj - objective) <= stall_tol * max(1.0, abs(new_obj))
            and gap <= 1e-6 * max(1.0, float(np.linalg.norm(y)))
        ):
            stall += 1
            if stall >= stall_iters:
                objective = new_obj
                break
        else:
            stall = 0
        objective = new_obj
    else:
        raise OracleError(f"no objective stall within {max_iters} iterations")

    resid = float(np.linalg.norm(a_omega @ y - b))
    if exact_fit and resid > 1e-6 * max(1.0, b_norm):
        raise OracleError(f"exact fit not achieved on the grid (residual {resid:.3e})")
    norms = np.linalg.norm(x, axis=1)
    support = np.flatnonzero(norms > 1e-6 * max(norms.max(), np.finfo(float).tiny))
    return objective, support


def atomic_l0_oracle(y, k_max: int, grid_size: int) -> int:
    """Smallest number of grid atoms fitting y within 1e-8, by exhaustive search.

    Desk-scale only: requires N <= 8, k_max <= 3, grid_size <= 64, and
    returns k_max + 1 when no subset of size <= k_max fits.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if y.shape[1] > y.shape[0]:
        y = y.T
    n = y.shape[0]
    if n > 8 or k_max > 3 or grid_size > 64:
        raise ValueError(
            f"combinatorial budget exceeded (N={n} <= 8, k_max={k_max} <= 3, "
            f"grid_size={grid_size} <= 64 required)"
        )
    tol = 1e-8 * max(1.0, float(np.linalg.norm(y)))
    if np.linalg.norm(y) <= tol:
        return 0
    grid = np.arange(grid_size) / grid_size
    atoms = steering_matrix(grid, n)
    for k in range(1, k_max + 1):
        for subset in itertools.combinations(range(grid_size), k):
            a = atoms[:, subset]
            coef, *_ = np.linalg.lstsq(a, y, rcond=None)
            if np.linalg.norm(a @ coef - y) <= tol:
                return k
    return k_max + 1
