"""Reservoir-computing benchmark on the Mackey-Glass series.

The network weights stay frozen; a ridge readout maps the hidden state
``h_t`` (after reading ``u(t)``) plus a constant feature to the next value
``u(t + 1)``. Training and test windows are contiguous and start right
after the Mackey-Glass washout; the reservoir washout is taken from the
samples just before that point, so changing it never moves the windows.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg as la

from .architecture import as_architecture
from .criterion import gc_asymptotic, realization_gain
from .disorder import BiasScheme, NetworkConfig, realize
from .dynamics import run_driven
from .errors import ConfigurationError, ContractError, SingularSystemError
from .parallel import pmap
from .results import SweepResult


@dataclass(frozen=True)
class MackeyGlassConfig:
    beta: float = 0.2
    gamma: float = 0.1
    n: float = 10.0
    tau: int = 25
    history_init: float = 1.2
    length: int = 6501
    washout: int = 1000

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise ConfigurationError(f"tau must be a positive integer, got {self.tau}")
        if not self.length > self.washout >= 0:
            raise ConfigurationError(
                f"need length > washout >= 0, got length={self.length}, washout={self.washout}"
            )


def mackey_glass(config: MackeyGlassConfig = MackeyGlassConfig()) -> np.ndarray:
    """Discrete Mackey-Glass series u(t+1) = (1-gamma) u(t) + beta u(t-tau) / (1 + u(t-tau)^n).

    Indices ``0 .. tau`` hold the constant history; the first ``washout``
    samples of the full series are dropped from the returned array.
    """
    tau = int(config.tau)
    u = np.empty(max(config.length, tau + 1))
    u[: tau + 1] = config.history_init
    a, b, n = 1.0 - config.gamma, config.beta, config.n
    for t in range(tau, config.length - 1):
        d = u[t - tau]
        u[t + 1] = a * u[t] + b * d / (1.0 + d ** n)
    return u[config.washout: config.length].copy()


def drive_reservoir(realization, arch, g: float, input_sequence, input_scale: float = 1.0,
                    washout: int = 0, h0=None) -> np.ndarray:
    """Hidden states (rows = time) after each input, with the first ``washout`` rows dropped."""
    if not realization.s_c_is_zero:
        raise ContractError("reservoir runs require a zero candidate bias (s_c = 0)")
    u = np.asarray(input_sequence, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ContractError("input sequence has non-finite values")
    if not 0 <= washout < len(u):
        raise ContractError(f"washout must lie in [0, {len(u)}), got {washout}")
    h0 = np.ones(realization.N) if h0 is None else h0
    states = run_driven(realization, arch, g, h0, input_scale * u.reshape(len(u), -1))
    return states[washout:]


@dataclass
class ReadoutModel:
    """Linear readout; the last weight multiplies the constant feature."""

    weights: np.ndarray
    ridge_lambda: float
    residual: float = 0.0

    def predict(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        return X @ self.weights[:-1] + self.weights[-1]


def _augment(features):
    X = np.asarray(features, dtype=float)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def ridge_objective(model: ReadoutModel, features, targets) -> float:
    r = model.predict(features) - np.asarray(targets, dtype=float)
    w = model.weights[:-1]
    return float(r @ r + model.ridge_lambda * (w @ w))


def fit_ridge(features, targets, ridge_lambda: float = 1e-6, rtol: float = 1e-8,
              max_refine: int = 5) -> ReadoutModel:
    """Solve (X^T X + lambda P) w = X^T y for the bias-augmented design X.

    ``P`` is the identity except for a zero on the constant column, so the
    intercept is not shrunk. Cholesky solve with iterative refinement until
    the normal-equation residual is below ``rtol`` relative to ``X^T y``.
    """
    X = _augment(features)
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ContractError(f"{X.shape[0]} feature rows but {y.size} targets")
    if ridge_lambda < 0:
        raise ConfigurationError(f"ridge_lambda must be nonnegative, got {ridge_lambda}")
    p = X.shape[1]
    A = X.T @ X
    A[np.arange(p - 1), np.arange(p - 1)] += ridge_lambda
    rhs = X.T @ y
    if ridge_lambda == 0 and np.linalg.matrix_rank(X) < p:
        raise SingularSystemError(
            "design matrix is rank deficient; the unregularized normal equations are "
            "singular; use ridge_lambda > 0"
        )
    try:
        factor = la.cho_factor(A, check_finite=False)
    except la.LinAlgError as exc:
        raise SingularSystemError(
            f"normal equations are not positive definite ({exc}); use a larger ridge_lambda"
        ) from exc
    w = la.cho_solve(factor, rhs, check_finite=False)
    scale = np.linalg.norm(rhs) or 1.0
    res = np.linalg.norm(rhs - A @ w) / scale
    for _ in range(max_refine):
        if res <= rtol:
            break
        w = w + la.cho_solve(factor, rhs - A @ w, check_finite=False)
        res = np.linalg.norm(rhs - A @ w) / scale
    return ReadoutModel(weights=w, ridge_lambda=float(ridge_lambda), residual=float(res))


def mse(pred, target) -> float:
    d = np.asarray(pred) - np.asarray(target)
    return float(np.mean(d * d))


@dataclass(frozen=True)
class ReservoirConfig:
    arch: str = "lstm"
    N: int = 500
    mg: MackeyGlassConfig = field(default_factory=MackeyGlassConfig)
    reservoir_washout: int = 500
    train_length: int = 3000
    test_length: int = 1000
    ridge_lambda: float = 1e-6
    input_scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.reservoir_washout <= self.mg.washout:
            raise ConfigurationError(
                f"reservoir washout ({self.reservoir_washout}) must lie in "
                f"[0, Mackey-Glass washout = {self.mg.washout}]"
            )
        if self.train_length < 1 or self.test_length < 1:
            raise ConfigurationError("train and test lengths must be positive")

    @property
    def series_length(self) -> int:
        """Full Mackey-Glass length from t = 0 (the last sample is only a target)."""
        return self.mg.washout + self.train_length + self.test_length + 1

    def mg_config(self) -> MackeyGlassConfig:
        """The series generator, keeping every sample (washout handled by rc_run)."""
        return replace(self.mg, length=self.series_length, washout=0)

    def network(self, s_b: float, seed: int) -> NetworkConfig:
        return NetworkConfig(arch=self.arch, N=self.N, K=1,
                             bias=BiasScheme.gaussian(s_b) if s_b > 0 else BiasScheme.zero(),
                             seed=seed)


@dataclass
class RcRunResult:
    g: float
    s_b: float
    N: int
    train_mse: float
    test_mse: float
    seed: int


def rc_run(config: ReservoirConfig, g: float, s_b: float = 0.0, seed: int = 0,
           series=None) -> RcRunResult:
    """Drive a fresh reservoir with Mackey-Glass input and score one-step prediction.

    ``series`` is the full series from t = 0 (as from ``config.mg_config()``).
    """
    u = mackey_glass(config.mg_config()) if series is None else np.asarray(series, dtype=float)
    if u.size < config.series_length:
        raise ContractError(f"series has {u.size} samples, need {config.series_length}")
    real = realize(config.network(s_b, seed))
    start = config.mg.washout
    stop = start + config.train_length + config.test_length
    inputs = u[start - config.reservoir_washout: stop]
    targets = u[start + 1: stop + 1]
    H = drive_reservoir(real, None, g, inputs, config.input_scale, config.reservoir_washout)
    ntr = config.train_length
    model = fit_ridge(H[:ntr], targets[:ntr], config.ridge_lambda)
    train = mse(model.predict(H[:ntr]), targets[:ntr])
    test = mse(model.predict(H[ntr:]), targets[ntr:])
    return RcRunResult(g=float(g), s_b=float(s_b), N=config.N, train_mse=train, test_mse=test,
                       seed=int(seed))


def critical_gain_for(config: ReservoirConfig, s_b: float, seed: int = 0,
                      normalization: str = "asymptotic") -> float:
    """g_c used to turn a ratio g/g_c into a gain."""
    arch = as_architecture(config.arch)
    if normalization == "asymptotic":
        scheme = BiasScheme.gaussian(s_b) if s_b > 0 else BiasScheme.zero()
        return gc_asymptotic(arch, scheme).g_c
    if normalization == "finite_N":
        return realization_gain(realize(config.network(s_b, seed))).g_c
    raise ConfigurationError(f"unknown normalization {normalization!r}")


RC_COLUMNS = ["s_b", "g", "g_over_gc", "N", "seed", "train_mse", "test_mse"]


def _rc_task(task) -> RcRunResult:
    config, ratio, s_b, seed, normalization, series = task
    gc = critical_gain_for(config, s_b, seed, normalization)
    return rc_run(config, ratio * gc, s_b, seed, series)


def rc_sweep(config: ReservoirConfig, ratios, seeds, s_b: float = 0.0,
             normalization: str = "asymptotic", jobs: int | None = None) -> SweepResult:
    """One row per (ratio, seed): train and test MSE at g = ratio * g_c(s_b)."""
    series = mackey_glass(config.mg_config())
    result = SweepResult(columns=list(RC_COLUMNS), metadata=_rc_metadata(config, normalization))
    tasks = [(config, float(ratio), float(s_b), int(seed), normalization, series)
             for ratio in ratios for seed in seeds]
    for (_, ratio, _, seed, _, _), run in zip(tasks, pmap(_rc_task, tasks, jobs)):
        result.add(s_b=float(s_b), g=run.g, g_over_gc=ratio, N=config.N, seed=seed,
                   train_mse=run.train_mse, test_mse=run.test_mse)
    return result


def mean_by_ratio(sweep: SweepResult, column: str) -> dict:
    """Average ``column`` over seeds for each g/g_c (insertion order kept)."""
    acc: dict = {}
    for ratio, v in zip(sweep.column("g_over_gc"), sweep.column(column)):
        acc.setdefault(ratio, []).append(v)
    return {k: float(np.mean(v)) for k, v in acc.items()}


def normalize_row(values) -> np.ndarray:
    """Rescale to [0, 1]; a constant row maps to all ones."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.ones_like(v)
    return (v - lo) / (hi - lo)


def rc_heatmap(config: ReservoirConfig, s_b_grid, ratio_grid, seeds,
               normalization: str = "asymptotic", jobs: int | None = None) -> SweepResult:
    """Row-normalized mean accuracy 1/test_mse over the (s_b, g/g_c) grid."""
    s_b_grid, ratio_grid = list(s_b_grid), list(ratio_grid)
    if not s_b_grid or not ratio_grid:
        raise ContractError("heatmap grids must be nonempty")
    result = SweepResult(columns=["s_b", "g_over_gc", "normalized_accuracy", "mean_accuracy"],
                         metadata={**_rc_metadata(config, normalization),
                                   "seeds": ",".join(str(s) for s in seeds)})
    for s_b in s_b_grid:
        sweep = rc_sweep(config, ratio_grid, seeds, s_b, normalization, jobs)
        acc = {}
        for ratio, test in zip(sweep.column("g_over_gc"), sweep.column("test_mse")):
            acc.setdefault(ratio, []).append(1.0 / test)
        means = [float(np.mean(acc[r])) for r in ratio_grid]
        for ratio, norm, m in zip(ratio_grid, normalize_row(means), means):
            result.add(s_b=float(s_b), g_over_gc=float(ratio), normalized_accuracy=float(norm),
                       mean_accuracy=m)
    return result


def _rc_metadata(config: ReservoirConfig, normalization: str) -> dict:
    meta = {k: v for k, v in asdict(config).items() if k != "mg"}
    meta.update({f"mg_{k}": v for k, v in asdict(config.mg).items() if k != "length"})
    meta["gc_normalization"] = normalization
    return meta
