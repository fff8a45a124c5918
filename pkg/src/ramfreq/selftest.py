"""Built-in property checks runnable without a test framework (`ramfreq selftest`).

A condensed version of the pytest suite's invariants: one line per check,
nonzero exit when anything fails.
"""

from __future__ import annotations

import numpy as np

from .admm import AdmmConfig, WeightedSdpProblem, augmented_lagrangian, primal_update, psd_project, solve
from .core import ObservationSet, steering, synthesize, toeplitz_adjoint, toeplitz_build, LineSpectrum
from .metrics import freq_mse
from .oracles import grid_l21_oracle
from .ram import anm_solve, weight_update
from .vandermonde import decompose


def _check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")
    return bool(ok)


def run_selftest() -> bool:
    rng = np.random.default_rng(20240)
    ok = True

    errs = [abs(np.linalg.norm(steering(f, n)) ** 2 - n)
            for n in (3, 8, 33) for f in rng.uniform(size=5)]
    ok &= _check("steering norm ||a(f)||^2 = n", max(errs) < 1e-12)

    n = 12
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u[0] = abs(u[0].real)
    worst = 0.0
    for _ in range(50):
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        lhs = np.trace(toeplitz_build(u).conj().T @ m).real
        rhs = np.vdot(u, toeplitz_adjoint(m)).real
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok &= _check("Toeplitz adjoint identity", worst < 1e-10, f"max rel err {worst:.2e}")

    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    m = m + m.conj().T
    p = psd_project(m)
    ok &= _check("PSD projection idempotent",
                 np.linalg.norm(psd_project(p) - p) < 1e-10 * max(1, np.linalg.norm(p)))

    f_true = np.array([0.13, 0.37, 0.71])
    t = sum(pk * np.outer(steering(fk, 10), steering(fk, 10).conj())
            for pk, fk in zip((2.0, 1.0, 0.5), f_true))
    dec = decompose(t, 1e-8)
    ok &= _check("Vandermonde round trip",
                 dec.freqs.size == 3 and np.max(np.abs(dec.freqs - f_true)) < 1e-7)

    ok &= _check("gradient of aug-Lagrangian vanishes at primal update",
                 _gradient_check(rng) < 1e-5)

    s = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = np.outer(steering(0.3, 8), s)
    anm = anm_solve(ObservationSet(8, np.arange(8), y))
    ok &= _check("single-atom atomic norm = ||s||",
                 abs(anm.atomic_norm - np.linalg.norm(s)) < 1e-3 * np.linalg.norm(s))

    y_grid = np.outer(steering(77 / 256, 8), s)  # on-grid atom for the oracle
    oracle_obj, _ = grid_l21_oracle(ObservationSet(8, np.arange(8), y_grid), grid_size=256)
    ok &= _check("grid oracle matches closed form",
                 abs(oracle_obj - np.linalg.norm(s)) < 1e-4 * np.linalg.norm(s))

    ok &= _check("freq_mse circular wrap", abs(freq_mse([0.999], [0.001]) - 4e-6) < 1e-18)

    w = weight_update(np.zeros(6), 1.0)
    ok &= _check("weight update inverse identity", np.linalg.norm(w - np.eye(6)) < 1e-12)
    return bool(ok)


def _gradient_check(rng, n=5, l=2):
    worst = 0.0
    for _ in range(5):
        obs = ObservationSet(
            n, np.sort(rng.choice(n, size=3, replace=False)),
            rng.standard_normal((3, l)) + 1j * rng.standard_normal((3, l)),
            eta=10.0,
        )
        w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        w = w @ w.conj().T / n
        problem = WeightedSdpProblem(obs, w)
        rho = float(rng.uniform(0.5, 3.0))
        dim = n + l
        q = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        q = q @ q.conj().T / dim
        lam = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        lam = 0.5 * (lam + lam.conj().T)
        u, x, y = primal_update(problem, rho, q + lam / rho)

        def value(du=0.0, dx=0.0, dy=0.0, iu=0, ix=(0, 0), iy=(0, 0)):
            uu, xx, yy = u.copy(), x.copy(), y.copy()
            uu[iu] += du
            xx[ix] += dx
            xx[ix[1], ix[0]] += np.conj(dx)
            yy[iy] += dy
            return augmented_lagrangian(problem, rho, uu, xx, yy, q, lam)

        h = 1e-6
        scale = max(abs(value()), 1.0)
        for i in range(n):
            for d in (h, 1j * h):
                g = (value(du=d, iu=i) - value(du=-d, iu=i)) / (2 * h)
                if i == 0 and d.imag:
                    continue  # u[0] is constrained real
                worst = max(worst, abs(g) / scale)
        g = (value(dx=h / 2, ix=(0, 1)) - value(dx=-h / 2, ix=(0, 1))) / h
        worst = max(worst, abs(g) / scale)
        free_row = [i for i in range(n) if i not in obs.omega][0]
        g = (value(dy=h, iy=(free_row, 0)) - value(dy=-h, iy=(free_row, 0))) / (2 * h)
        worst = max(worst, abs(g) / scale)
    return worst


if __name__ == "__main__":
    import sys

    sys.exit(0 if run_selftest() else 1)
