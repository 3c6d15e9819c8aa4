"""Linearization at the origin and its spectral radius.

The radius is estimated by block power iteration: every restart is a column
of one iterate matrix, so restarts share each pass over ``J``. A dominant
complex-conjugate pair makes single-vector power iteration oscillate, so
every ``check_every`` iterations a two-step recurrence ``x2 ~ a x1 + b x0``
is fitted and the radius read off the roots of ``t^2 - a t - b``. When
neither the one-step (real) nor the two-step fit reaches ``tol`` the
estimate falls back to the mean log-growth of the iterate norms over the
second half of the run, flagged as not converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criterion import extract_MLR
from .disorder import NetworkConfig, realize, substream
from .errors import ContractError
from .observables import mean_ci95
from .results import SweepResult

FULL_SPECTRUM_MAX_N = 300


@dataclass
class JacobianMatrix:
    J: np.ndarray
    g: float
    provenance: dict = field(default_factory=dict)


@dataclass
class RadiusEstimate:
    radius: float
    converged: bool
    iterations: int
    residual: float

    def __float__(self):
        return self.radius


def build_jacobian(realization, arch=None, g: float = 1.0) -> JacobianMatrix:
    """J = diag(M) + g diag(L) U diag(R) at the origin fixed point."""
    if not realization.s_c_is_zero:
        raise ContractError(
            "the origin is not a fixed point when the candidate bias is nonzero (s_c > 0); "
            "the linearization there does not describe the dynamics"
        )
    tri = extract_MLR(realization, arch)
    J = g * (tri.L[:, None] * realization.U * tri.R[None, :])
    J[np.diag_indices_from(J)] += tri.M
    prov = {"seed": realization.seed, "replica": realization.replica,
            "arch": realization.arch.kind, **realization.bias.describe()}
    return JacobianMatrix(J=J, g=float(g), provenance=prov)


def _two_step(x0, x1, x2):
    """Per-column radius and relative residual of real and complex-pair fits."""
    B = x0.shape[1]
    radius = np.empty(B)
    resid = np.empty(B)
    for b in range(B):
        u, v, w = x0[:, b], x1[:, b], x2[:, b]
        uu = float(u @ u)
        if uu == 0.0:
            # the start vector was annihilated: it sees no nonzero eigenvalue
            radius[b], resid[b] = 0.0, 0.0
            continue
        wn = np.linalg.norm(w) or 1.0
        # one-step: v ~ lam u
        lam = float(u @ v) / uu
        r1 = np.linalg.norm(w - lam * v) / wn
        # two-step: w ~ a v + b u
        A = np.column_stack([v, u])
        coef, *_ = np.linalg.lstsq(A, w, rcond=None)
        r2 = np.linalg.norm(w - A @ coef) / wn
        roots = np.roots([1.0, -coef[0], -coef[1]])
        if r1 <= r2:
            radius[b], resid[b] = abs(lam), r1
        else:
            radius[b], resid[b] = float(np.max(np.abs(roots))), r2
    return radius, resid


def spectral_radius(J, tol: float = 1e-8, max_iters: int = 5000, restarts: int = 8,
                    rng=None, check_every: int = 10) -> RadiusEstimate:
    """Largest eigenvalue modulus of a square real matrix, max over restarts."""
    J = np.asarray(J.J if isinstance(J, JacobianMatrix) else J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise ContractError("matrix has non-finite entries")
    N = J.shape[0]
    rng = np.random.default_rng(rng)
    X = rng.standard_normal((N, restarts))
    X /= np.linalg.norm(X, axis=0)
    log_growth = []  # (sum of log norms, matrix applications) per record
    best_r = np.zeros(restarts)
    best_res = np.full(restarts, np.inf)
    it = 0
    while it < max_iters:
        Y = J @ X
        it += 1
        n = _safe_norms(Y)
        if it % check_every == 0:
            Z = J @ Y
            it += 1
            r, res = _two_step(X, Y, Z)
            better = res < best_res
            best_r[better], best_res[better] = r[better], res[better]
            if np.all(best_res < tol):
                break
            nz = _safe_norms(Z)
            log_growth.append((np.log(n) + np.log(nz), 2))
            X = Z / nz
        else:
            log_growth.append((np.log(n), 1))
            X = Y / n
    if np.all(best_res < tol):
        return RadiusEstimate(float(best_r.max()), True, it, float(best_res.max()))
    tail = log_growth[len(log_growth) // 2:]
    growth = np.exp(sum(l for l, _ in tail) / max(1, sum(k for _, k in tail)))
    est = np.where(best_res < 1e-3, best_r, growth)
    return RadiusEstimate(float(est.max()), False, it, float(best_res.min()))


def _safe_norms(Y):
    n = np.linalg.norm(Y, axis=0)
    # a start vector annihilated by J contributes radius 0; keep it finite
    return np.where(n > 0, n, np.finfo(float).tiny)


def eigenvalues(J, force: bool = False) -> np.ndarray:
    """All eigenvalues (LAPACK Hessenberg + shifted QR); small matrices only."""
    J = np.asarray(J.J if isinstance(J, JacobianMatrix) else J, dtype=float)
    if J.shape[0] > FULL_SPECTRUM_MAX_N and not force:
        raise ContractError(
            f"full spectrum limited to N <= {FULL_SPECTRUM_MAX_N}; pass force=True to override"
        )
    return np.linalg.eigvals(J)


def radius_vs_gain_sweep(config: NetworkConfig, g_grid, replicas: int = 5, tol: float = 1e-8,
                         max_iters: int = 5000, restarts: int = 8) -> SweepResult:
    """Mean and 95% interval of the spectral radius of J at each gain."""
    g_grid = [float(g) for g in g_grid]
    if not g_grid:
        raise ContractError("gain grid is empty")
    radii = np.empty((replicas, len(g_grid)))
    flags = np.ones(len(g_grid), dtype=bool)
    for r in range(replicas):
        real = realize(config, replica=r)
        rng = substream(config.seed, "power_iteration", r)
        for j, g in enumerate(g_grid):
            est = spectral_radius(build_jacobian(real, None, g), tol, max_iters, restarts, rng)
            radii[r, j] = est.radius
            flags[j] &= est.converged
    result = SweepResult(
        columns=["g", "radius_mean", "radius_ci", "N", "replicas", "converged"],
        metadata={"arch": config.arch.kind, "N": config.N, "seed": config.seed,
                  **config.bias.describe(), "replicas": replicas, "tol": tol,
                  "max_iters": max_iters, "restarts": restarts},
    )
    for j, g in enumerate(g_grid):
        mean, half = mean_ci95(radii[:, j])
        result.add(g=g, radius_mean=mean, radius_ci=half, N=config.N, replicas=replicas,
                   converged=int(flags[j]))
    return result
