"""Order parameter q_t = mean(h^2) and its long-time, replica-averaged value."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .disorder import NetworkConfig, realize
from .dynamics import trajectory
from .errors import ContractError, NumericalBlowupError
from .parallel import pmap

# Below this the long-time order parameter is reported as zero.
Q_ZERO_FLOOR = 1e-8


@dataclass
class QEstimate:
    g: float
    mean_q_inf: float
    ci95_halfwidth: float
    replicas: int
    T: int
    N: int
    tail_window: int
    per_replica: list

    @property
    def is_zero(self) -> bool:
        return self.mean_q_inf < Q_ZERO_FLOOR

    def row(self, config: NetworkConfig) -> dict:
        b = config.bias
        return {
            "g": self.g, "s_b": b.s_b, "s_c": b.s_c, "N": self.N, "T": self.T,
            "replicas": self.replicas, "mean_q_inf": self.mean_q_inf, "ci95": self.ci95_halfwidth,
        }


def q_of_state(h) -> float:
    """(1/N) sum_i h_i^2."""
    h = np.asarray(h, dtype=float)
    return float(np.mean(h * h, axis=0)) if h.ndim == 1 else np.mean(h * h, axis=0)


def mean_ci95(values) -> tuple[float, float]:
    """Sample mean and Student-t 95% half-width (zero for a single value)."""
    v = np.asarray(values, dtype=float)
    mean = float(v.mean())
    if v.size < 2:
        return mean, 0.0
    half = float(stats.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size))
    return mean, half


def default_tail_window(T: int) -> int:
    return max(1, min(T // 4, 500))


def replica_q_inf(realization, g: float, T: int, tail_window: int, h0=None) -> float:
    """Mean of q_t over the last ``tail_window`` steps of one autonomous run."""
    h0 = np.ones(realization.N) if h0 is None else h0
    acc = 0.0
    start = T - tail_window + 1
    for t, h in enumerate(trajectory(realization, None, g, h0, T)):
        if t >= start:
            acc += q_of_state(h)
    return acc / tail_window


def _replica_task(task) -> float:
    config, r, g, T, tail_window, h0 = task
    try:
        return replica_q_inf(realize(config, replica=r), g, T, tail_window, h0)
    except NumericalBlowupError as exc:
        raise NumericalBlowupError(f"{exc} [replica {r}]", step=exc.step, seed=config.seed) from exc


def estimate_q_inf(config: NetworkConfig, g: float, T: int = 4000, replicas: int = 20,
                   tail_window: int | None = None, h0=None, jobs: int | None = None) -> QEstimate:
    """Replica-averaged long-time order parameter from ``h0`` (default all ones)."""
    if tail_window is None:
        tail_window = default_tail_window(T)
    if not 1 <= tail_window <= T:
        raise ContractError(f"need T >= tail_window >= 1, got T={T}, tail_window={tail_window}")
    values = pmap(_replica_task, [(config, r, g, T, tail_window, h0) for r in range(replicas)],
                  jobs)
    mean, half = mean_ci95(values)
    return QEstimate(g=float(g), mean_q_inf=mean, ci95_halfwidth=half, replicas=replicas,
                     T=T, N=config.N, tail_window=tail_window, per_replica=values)
