"""Unified gated recurrent update and its autonomous / driven iteration.

States are column vectors: ``h`` has shape ``(N,)`` or ``(N, B)`` for ``B``
trajectories advanced together through the same realization. The gain may be
a scalar or a length-``B`` array (one gain per column), which lets a single
pass over the weight matrices serve several gains at once.

For the LSTM the output gate is evaluated first, on ``tanh(h)``; the visible
state ``o * tanh(h)`` then feeds the forget and input gates and the candidate.
All gates therefore depend on the current ``h`` alone and the update is a
map ``h_t -> h_{t+1}``.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np
from scipy.special import expit

from .architecture import ArchitectureSpec, as_architecture
from .disorder import DisorderRealization
from .errors import ContractError, NumericalBlowupError

__all__ = [
    "ArchitectureSpec",
    "gate_values",
    "step",
    "trajectory",
    "run_autonomous",
    "run_driven",
]


def _check_arch(realization: DisorderRealization, arch) -> ArchitectureSpec:
    if arch is None:
        return realization.arch
    arch = as_architecture(arch)
    if arch.kind != realization.arch.kind:
        raise ContractError(
            f"realization was sampled for {realization.arch.kind!r}, not {arch.kind!r}"
        )
    return arch


def _stacked(realization: DisorderRealization) -> dict:
    """Row-stacked matrices so each step needs one product per stage."""
    cache = realization.cache
    if "stack" not in cache:
        kind = realization.arch.kind
        gU, gW = realization.gate_U, realization.gate_W
        if kind == "lstm":
            stack = {
                "first_U": gU["o"],
                "second_U": np.vstack([realization.U, gU["f"], gU["i"]]),
                "W": np.vstack([realization.W, gW["f"], gW["i"], gW["o"]]),
            }
        elif kind == "gru":
            stack = {
                "first_U": np.vstack([gU["z"], gU["r"]]),
                "W": np.vstack([realization.W, gW["z"], gW["r"]]),
            }
        else:
            stack = {"W": realization.W}
        cache["stack"] = stack
    return cache["stack"]


def _as_columns(h):
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        return h[:, None], True
    if h.ndim == 2:
        return h, False
    raise ContractError(f"state must be 1-D or 2-D, got shape {h.shape}")


def _gain(g, B):
    g = np.asarray(g, dtype=float)
    if g.ndim == 0:
        return float(g)
    if g.shape != (B,):
        raise ContractError(f"gain array must have shape ({B},), got {g.shape}")
    return g[None, :]


def _input_drive(realization, x, B):
    """W-stack @ x as an (rows, B) array, or 0 when there is no input."""
    if x is None:
        return 0.0
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != realization.K:
        raise ContractError(f"input has {x.shape[0]} rows, realization expects K={realization.K}")
    if x.shape[1] not in (1, B):
        raise ContractError(f"input has {x.shape[1]} columns for {B} trajectories")
    return _stacked(realization)["W"] @ x


def _bias(realization, name):
    b = realization.b_c if name == "c" else realization.gate_b[name]
    return b[:, None]


def _evaluate(realization, arch, h, x, g):
    """Gates, candidate preactivation and (A, alpha) for column states ``h``."""
    N = realization.N
    if h.shape[0] != N:
        raise ContractError(f"state has {h.shape[0]} rows, realization has N={N}")
    B = h.shape[1]
    g = _gain(g, B)
    drive = _input_drive(realization, x, B)
    st = _stacked(realization)

    def part(k):
        return 0.0 if np.isscalar(drive) else drive[k * N:(k + 1) * N]

    kind = arch.kind
    gates = {}
    if kind == "lstm":
        th = np.tanh(h)
        gates["o"] = expit(g * (st["first_U"] @ th) + part(3) + _bias(realization, "o"))
        visible = gates["o"] * th
        pre = st["second_U"] @ visible
        if arch.psi == "tanh":
            rec = pre[:N]
        else:
            rec = realization.U @ (gates["o"] * arch.psi_fn(h))
        gates["f"] = expit(g * pre[N:2 * N] + part(1) + _bias(realization, "f"))
        gates["i"] = expit(g * pre[2 * N:] + part(2) + _bias(realization, "i"))
        A = gates["f"] + gates["i"]
        alpha = gates["i"] / A
    elif kind == "gru":
        pre = st["first_U"] @ h
        gates["z"] = expit(g * pre[:N] + part(1) + _bias(realization, "z"))
        gates["r"] = expit(g * pre[N:] + part(2) + _bias(realization, "r"))
        rec = realization.U @ (gates["r"] * arch.psi_fn(h))
        A = 1.0
        alpha = gates["z"]
    else:
        rec = realization.U @ arch.psi_fn(h)
        A = 1.0
        alpha = 1.0
    cand = g * rec + part(0) + _bias(realization, "c")
    return gates, cand, A, alpha


def gate_values(realization: DisorderRealization, arch=None, h=None, x=None, g=1.0) -> dict:
    """Gate activations at state ``h`` (zeros if omitted) and input ``x``.

    Returns a dict keyed by gate name (``f``, ``i``, ``o`` or ``z``, ``r``),
    each array shaped like ``h``. The RNN has no gates.
    """
    arch = _check_arch(realization, arch)
    if h is None:
        h = np.zeros(realization.N)
    cols, squeeze = _as_columns(h)
    gates, _, _, _ = _evaluate(realization, arch, cols, x, g)
    if squeeze:
        gates = {k: v[:, 0] for k, v in gates.items()}
    return gates


def step(realization: DisorderRealization, arch, g, h, x=None, *, t=None) -> np.ndarray:
    """One application of the unified update ``h -> h'``.

    ``t`` is only used to label a :class:`NumericalBlowupError`.
    """
    arch = _check_arch(realization, arch)
    cols, squeeze = _as_columns(h)
    _, cand, A, alpha = _evaluate(realization, arch, cols, x, g)
    if arch.kind == "rnn":
        new = arch.phi_fn(cand)
    else:
        new = A * ((1.0 - alpha) * cols + alpha * arch.phi_fn(cand))
    if not np.all(np.isfinite(new)):
        where = "" if t is None else f" at step {t}"
        raise NumericalBlowupError(
            f"non-finite hidden state{where} (seed={realization.seed}, replica={realization.replica})",
            step=t, seed=realization.seed,
        )
    return new[:, 0] if squeeze else new


def trajectory(realization, arch, g, h0, T: int, inputs=None) -> Iterator[np.ndarray]:
    """Yield ``h_0, h_1, ..., h_T``; ``inputs[t]`` drives the step to ``h_{t+1}``."""
    if T < 0:
        raise ContractError(f"T must be nonnegative, got {T}")
    arch = _check_arch(realization, arch)
    h = np.array(h0, dtype=float)
    yield h
    for t in range(T):
        x = None if inputs is None else inputs[t]
        h = step(realization, arch, g, h, x, t=t + 1)
        yield h


def run_autonomous(realization, arch, g, h0, T: int, store: bool = False):
    """Iterate with zero input for ``T`` steps.

    Returns the final state, or the ``(T + 1, ...)`` stack of all states when
    ``store`` is true. Use :func:`trajectory` to fold over states lazily.
    """
    states = trajectory(realization, arch, g, h0, T)
    if store:
        return np.stack(list(states))
    h = None
    for h in states:
        pass
    return h


def run_driven(realization, arch, g, h0, inputs) -> np.ndarray:
    """States ``h_1 .. h_T`` (rows) produced by the input sequence ``inputs`` of shape (T, K)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    T = inputs.shape[0]
    out = np.empty((T, realization.N))
    h = np.array(h0, dtype=float)
    arch = _check_arch(realization, arch)
    for t in range(T):
        h = step(realization, arch, g, h, inputs[t], t=t + 1)
        out[t] = h
    return out
