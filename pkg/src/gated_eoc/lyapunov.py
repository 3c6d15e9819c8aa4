"""Maximal Lyapunov exponent (two-trajectory Benettin) and its zero crossing in g.

A reference and a perturbed trajectory are advanced together; after every
step their separation is measured, its log-growth recorded, and the
perturbed state pulled back to distance ``eps`` along the current
separation direction. Several gains for the same realization are simulated
as extra columns of one state matrix, so the weight matrices are read once
per step for all of them.

The crossing search is a multisection: each round evaluates ``points``
equally spaced gains inside the current bracket and keeps the sub-interval
where the exponent first turns positive. With ``points=1`` it is plain
bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .criterion import gc_gaussian_asymptotic, realization_gain
from .disorder import BiasScheme, NetworkConfig, realize, substream
from .dynamics import step
from .errors import BracketError, ContractError, NumericalBlowupError
from .observables import mean_ci95
from .parallel import pmap
from .results import SweepResult

DEFAULT_T = 3000
DEFAULT_TRANSIENT = 200
DEFAULT_EPS = 1e-7
DEFAULT_TOL_G = 5e-3


@dataclass
class LyapunovEstimate:
    g: float
    lambda_max: float
    stderr: float
    steps_used: int
    transient: int
    eps: float
    replicas: int = 1
    converged_to_attractor: bool = False


@dataclass
class CrossingEstimate:
    g_star: float
    ci95_halfwidth: float
    bracket: tuple
    replicas: int
    s_b: float = 0.0
    per_replica: list = field(default_factory=list)
    mode: str = "per_replica"
    evaluations: list = field(default_factory=list)


def batch_means_stderr(x, n_batches: int = 20) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    nb = min(n_batches, x.size)
    if nb < 2:
        return 0.0
    size = x.size // nb
    means = x[: nb * size].reshape(nb, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(nb))


def benettin(step_fn, h0, T: int, transient: int = 0, eps: float = DEFAULT_EPS,
             direction=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two-trajectory Benettin iteration for ``B`` independent columns.

    ``step_fn`` maps an ``(N, 2B)`` array (references then perturbed copies)
    to the next one. Returns ``(mean_log_growth, stderr, merged)``, each of
    length ``B``; merged columns (separation exactly zero) get ``-inf``.
    """
    if not T > transient >= 0:
        raise ContractError(f"need T > transient >= 0, got T={T}, transient={transient}")
    if not 0 < eps < 1:
        raise ContractError(f"eps must lie in (0, 1), got {eps}")
    H = np.array(h0, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    N, B = H.shape
    if direction is None:
        direction = np.ones(N)
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    state = np.hstack([H, H + eps * v[:, None]])
    logs = np.empty((T - transient, B))
    merged = np.zeros(B, dtype=bool)
    for t in range(1, T + 1):
        state = step_fn(state, t)
        ref, pert = state[:, :B], state[:, B:]
        diff = pert - ref
        d = np.linalg.norm(diff, axis=0)
        zero = d == 0
        if t > transient:
            with np.errstate(divide="ignore"):
                logs[t - transient - 1] = np.log(d / eps)
            merged |= zero
        d_safe = np.where(zero, 1.0, d)
        diff = np.where(zero[None, :], v[:, None], diff / d_safe)
        state[:, B:] = ref + eps * diff
    lam = np.empty(B)
    err = np.empty(B)
    for b in range(B):
        if merged[b]:
            lam[b], err[b] = -math.inf, 0.0
        else:
            lam[b] = logs[:, b].mean()
            err[b] = batch_means_stderr(logs[:, b])
    return lam, err, merged


def _direction(realization):
    return substream(realization.seed, "benettin_direction", realization.replica).standard_normal(
        realization.N
    )


def benettin_gains(realization, gains, h0=None, T: int = DEFAULT_T,
                   transient: int = DEFAULT_TRANSIENT, eps: float = DEFAULT_EPS,
                   arch=None) -> list[LyapunovEstimate]:
    """Lyapunov estimates for several gains of one realization in a single sweep."""
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    if np.any(gains < 0):
        raise ContractError("gains must be nonnegative")
    B = gains.size
    h0 = np.ones(realization.N) if h0 is None else np.asarray(h0, dtype=float)
    H0 = np.repeat(h0[:, None], B, axis=1)
    g2 = np.concatenate([gains, gains])

    def fn(state, t):
        return step(realization, arch, g2, state, t=t)

    try:
        lam, err, merged = benettin(fn, H0, T, transient, eps, _direction(realization))
    except NumericalBlowupError as exc:
        raise NumericalBlowupError(f"{exc} [replica {realization.replica}]", step=exc.step,
                                   seed=realization.seed) from exc
    return [
        LyapunovEstimate(g=float(g), lambda_max=float(l), stderr=float(e), steps_used=T - transient,
                         transient=transient, eps=eps, converged_to_attractor=bool(m))
        for g, l, e, m in zip(gains, lam, err, merged)
    ]


def benettin_lambda_max(realization, arch=None, g: float = 1.0, h0=None, T: int = DEFAULT_T,
                        transient: int = DEFAULT_TRANSIENT, eps: float = DEFAULT_EPS) -> LyapunovEstimate:
    """Maximal Lyapunov exponent (nats per step) of one realization at gain ``g``."""
    return benettin_gains(realization, [g], h0, T, transient, eps, arch)[0]


def lambda_grid(config: NetworkConfig, gains, replicas: int = 1, **kw) -> list[LyapunovEstimate]:
    """Replica-averaged exponent at each gain; the stderr combines replica spread."""
    gains = np.asarray(gains, dtype=float)
    per = np.empty((replicas, gains.size))
    errs = np.empty((replicas, gains.size))
    for r in range(replicas):
        est = benettin_gains(realize(config, replica=r), gains, **kw)
        per[r] = [e.lambda_max for e in est]
        errs[r] = [e.stderr for e in est]
        template = est
    out = []
    for j, e in enumerate(template):
        col = per[:, j]
        if replicas > 1 and np.all(np.isfinite(col)):
            se = float(col.std(ddof=1) / math.sqrt(replicas))
        else:
            se = float(np.sqrt(np.sum(errs[:, j] ** 2)) / replicas)
        out.append(LyapunovEstimate(g=e.g, lambda_max=float(col.mean()), stderr=se,
                                    steps_used=e.steps_used, transient=e.transient, eps=e.eps,
                                    replicas=replicas,
                                    converged_to_attractor=bool(np.all(np.isneginf(col)))))
    return out


def _next_bracket(points, lams):
    """Sub-interval where the exponent first becomes positive (points ascending)."""
    for j in range(1, len(points)):
        if lams[j] > 0:
            return points[j - 1], points[j]
    return points[-2], points[-1]


def _check_bracket(lo, hi, lam_lo, lam_hi):
    if not (lam_lo < 0 < lam_hi):
        raise BracketError(
            f"no sign change of lambda_max on [{lo}, {hi}]: "
            f"lambda({lo})={lam_lo:.4g}, lambda({hi})={lam_hi:.4g}",
            lambda_lo=lam_lo, lambda_hi=lam_hi,
        )


def find_crossing(config: NetworkConfig, bracket=(1.0, 3.0), tol_g: float = DEFAULT_TOL_G,
                  replicas: int = 10, T: int = DEFAULT_T, transient: int = DEFAULT_TRANSIENT,
                  eps: float = DEFAULT_EPS, points: int = 7, mode: str = "per_replica",
                  h0=None, first_replica: int = 0, expand: int = 0,
                  expand_factor: float = 2.0, tol_rel: float = 0.0,
                  jobs: int | None = None) -> CrossingEstimate:
    """Gain at which the maximal Lyapunov exponent crosses zero.

    ``per_replica`` mode locates the crossing separately on each replica's
    quenched disorder and reports the mean with a Student-t 95% interval over
    replicas. ``shared`` mode narrows one bracket on the replica-averaged
    exponent (a barrier per round); its interval is half the final bracket.
    The bracket endpoints are evaluated together with the first round's
    interior points so an invalid bracket is reported before any narrowing.
    With ``expand > 0`` an endpoint of the wrong sign is instead pushed out
    by ``expand_factor`` (up to ``expand`` times) before giving up. The
    search stops once the bracket is narrower than
    ``max(tol_g, tol_rel * lower end)``.
    Replicas are distributed over ``jobs`` worker processes.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ContractError(f"bracket must satisfy lo < hi, got {bracket}")
    kw = dict(h0=h0, T=T, transient=transient, eps=eps)
    ids = range(first_replica, first_replica + replicas)
    s_b = config.bias.s_b
    if mode == "per_replica":
        tasks = [(config, r, lo, hi, tol_g, tol_rel, points, expand, expand_factor, kw)
                 for r in ids]
        outcomes = pmap(_replica_crossing, tasks, jobs)
        crossings = [c for c, _ in outcomes]
        mean, half = mean_ci95(crossings)
        return CrossingEstimate(g_star=mean, ci95_halfwidth=half, bracket=(lo, hi),
                                replicas=replicas, s_b=s_b, per_replica=crossings, mode=mode,
                                evaluations=[h for _, h in outcomes])
    if mode == "shared":
        def evaluate(gs):
            acc = np.zeros(len(gs))
            for r in ids:
                acc += [e.lambda_max for e in benettin_gains(realize(config, replica=r), gs, **kw)]
            return acc / replicas

        a, b, hist = _first_round_multisect(evaluate, lo, hi, tol_g, points,
                                            expand, expand_factor, tol_rel)
        return CrossingEstimate(g_star=0.5 * (a + b), ci95_halfwidth=0.5 * (b - a),
                                bracket=(lo, hi), replicas=replicas, s_b=s_b, mode=mode,
                                evaluations=[hist])
    raise ContractError(f"unknown crossing mode {mode!r}")


def _lambdas(realization, kw, gs):
    return np.array([e.lambda_max for e in benettin_gains(realization, gs, **kw)])


def _replica_crossing(task):
    config, r, lo, hi, tol_g, tol_rel, points, expand, expand_factor, kw = task
    evaluate = partial(_lambdas, realize(config, replica=r), kw)
    a, b, hist = _first_round_multisect(evaluate, lo, hi, tol_g, points, expand, expand_factor,
                                        tol_rel)
    return 0.5 * (a + b), hist


def _first_round_multisect(evaluate, lo, hi, tol_g, points, expand=0, expand_factor=2.0,
                           tol_rel=0.0):
    """Multisection whose first round also evaluates the bracket endpoints."""
    pts = np.linspace(lo, hi, points + 2)
    lams = np.asarray(evaluate(pts), dtype=float)
    history = list(zip(pts.tolist(), lams.tolist()))
    for _ in range(expand):
        if lams[-1] <= 0:
            # still ordered at the top: the crossing lies beyond hi
            new = pts[-1] * expand_factor
            lam_new = float(np.asarray(evaluate([new]), dtype=float)[0])
            pts, lams = np.array([pts[-1], new]), np.array([lams[-1], lam_new])
        elif lams[0] >= 0:
            new = pts[0] / expand_factor
            lam_new = float(np.asarray(evaluate([new]), dtype=float)[0])
            pts, lams = np.array([new, pts[0]]), np.array([lam_new, lams[0]])
        else:
            break
        history.append((float(new), lam_new))
    _check_bracket(pts[0], pts[-1], lams[0], lams[-1])
    tol_g = max(tol_g, tol_rel * pts[0])
    lo, hi = _next_bracket(pts, lams)
    if hi - lo < tol_g:
        return lo, hi, history
    a, b, rest = _multisect_inner(evaluate, lo, hi, tol_g, points)
    return a, b, history + rest


def _multisect_inner(evaluate, lo, hi, tol_g, points):
    history = []
    while hi - lo >= tol_g:
        inner = np.linspace(lo, hi, points + 2)[1:-1]
        lam_in = np.asarray(evaluate(inner), dtype=float)
        history.extend(zip(inner.tolist(), lam_in.tolist()))
        pts = np.concatenate([[lo], inner, [hi]])
        lams = np.concatenate([[-1.0], lam_in, [1.0]])
        lo, hi = _next_bracket(pts, lams)
    return lo, hi, history


PHASE_COLUMNS = ["arch", "s_b", "g_c_asymptotic", "g_c_finite_mean", "g_star", "ci95",
                 "replicas", "N", "T", "eps", "seed"]


def phase_diagram(arch, s_b_grid, N: int = 1000, replicas: int = 10, seed: int = 0,
                  mode: str = "both", T: int = DEFAULT_T, transient: int = DEFAULT_TRANSIENT,
                  eps: float = DEFAULT_EPS, rel_tol: float = 5e-3, bracket_scale=(0.5, 1.5),
                  expand: int = 8, expand_factor: float = 4.0, points: int = 7, on_crossing=None,
                  jobs: int | None = None):
    """Predicted critical gain and (optionally) the empirical crossing for each s_b.

    ``mode`` is ``predicted``, ``empirical`` or ``both``. The search bracket
    is ``bracket_scale`` times the asymptotic prediction, expanded
    geometrically when the exponent has the same sign at both ends, and the
    tolerance is ``rel_tol`` times the prediction or, after an expansion,
    times the new lower end.
    """
    if mode not in ("predicted", "empirical", "both"):
        raise ContractError(f"unknown phase mode {mode!r}")
    out = SweepResult(PHASE_COLUMNS, metadata={"mode": mode, "rel_tol": rel_tol,
                                               "transient": transient})
    for s_b in s_b_grid:
        config = NetworkConfig(arch=arch, N=N, bias=BiasScheme.gaussian(float(s_b)), seed=seed)
        pred = gc_gaussian_asymptotic(config.arch, float(s_b)).g_c
        finite = float(np.mean([realization_gain(realize(config, replica=r)).g_c
                                for r in range(replicas)]))
        g_star = ci = math.nan
        if mode != "predicted":
            est = find_crossing(config, (bracket_scale[0] * pred, bracket_scale[1] * pred),
                                tol_g=rel_tol * pred, tol_rel=rel_tol, replicas=replicas, T=T,
                                transient=transient, eps=eps, points=points, expand=expand,
                                expand_factor=expand_factor, jobs=jobs)
            g_star, ci = est.g_star, est.ci95_halfwidth
            if on_crossing is not None:
                on_crossing(est)
        out.add(arch=config.arch.kind, s_b=float(s_b), g_c_asymptotic=pred,
                g_c_finite_mean=finite, g_star=g_star, ci95=ci, replicas=replicas, N=N, T=T,
                eps=eps, seed=seed)
    return out
