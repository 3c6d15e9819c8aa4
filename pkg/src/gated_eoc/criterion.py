"""Closed-form critical gain from the diagonal linearization at the origin.

At ``h = 0`` (with no candidate bias) every gate equals ``sigmoid(bias)`` and
the Jacobian of the update is ``J = diag(M) + g diag(L) U diag(R)``. The
boundary of the limiting spectral support of ``J`` is the set of ``z`` where

    (1/N) sum_i g^2 L_i^2 R_i^2 / |z - M_i|^2 = 1,

and since ``0 <= M_i < 1`` the left-hand side on the unit circle is largest at
``z = 1``. The support first reaches the unit circle at

    g_c = [ (1/N) sum_i L_i^2 R_i^2 / (1 - M_i)^2 ] ** (-1/2).

The theorem behind the boundary condition is stated for deterministic
sequences of ``M, L, R``; here it is applied realization by realization of
the random biases, which is a working assumption rather than a proved fact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, roots_hermitenorm

from .architecture import ArchitectureSpec, as_architecture
from .disorder import BiasScheme, DisorderRealization
from .errors import ConfigurationError, DomainError, PoleError, QuadratureError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class DiagonalTriple:
    """Diagonals of M, L, R, plus ``1 - M`` computed without cancellation.

    ``complement`` defaults to ``1 - M``. Extractors fill it from the
    complementary sigmoid so that structural identities such as ``L = 1 - M``
    (GRU, chrono LSTM) hold bit for bit.
    """

    M: np.ndarray
    L: np.ndarray
    R: np.ndarray
    complement: np.ndarray | None = None

    def __post_init__(self):
        self.M = np.atleast_1d(np.asarray(self.M, dtype=float))
        self.L = np.broadcast_to(np.asarray(self.L, dtype=float), self.M.shape).copy()
        self.R = np.broadcast_to(np.asarray(self.R, dtype=float), self.M.shape).copy()
        if self.complement is None:
            self.complement = 1.0 - self.M
        else:
            self.complement = np.broadcast_to(
                np.asarray(self.complement, dtype=float), self.M.shape
            ).copy()

    @property
    def N(self) -> int:
        return self.M.size

    def validate(self):
        if np.any(self.M < 0) or np.any(self.M >= 1) or np.any(self.complement <= 0):
            raise DomainError("critical gain requires every M_i in [0, 1)")
        if np.any(self.L <= 0) or np.any(self.R <= 0):
            raise DomainError("L and R must be strictly positive (invertible)")

    def summary(self) -> dict:
        out = {}
        for name in ("M", "L", "R"):
            v = getattr(self, name)
            out[f"{name}_mean"] = float(v.mean())
            out[f"{name}_min"] = float(v.min())
            out[f"{name}_max"] = float(v.max())
        return out


@dataclass
class CriticalGainPrediction:
    g_c: float
    arch: ArchitectureSpec
    scheme: BiasScheme | None
    mode: str  # "finite_N" or "asymptotic"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.isfinite(self.g_c) and self.g_c > 0):
            raise DomainError(f"critical gain must be positive and finite, got {self.g_c}")

    def to_dict(self) -> dict:
        out = {"g_c": self.g_c, "arch": self.arch.kind, "mode": self.mode}
        if self.scheme is not None:
            out.update(self.scheme.describe())
        out.update(self.details)
        return out


def extract_MLR(realization: DisorderRealization, arch=None) -> DiagonalTriple:
    """Diagonal entries of M, L, R for the gates evaluated at ``h = 0``.

    LSTM: (sigmoid(b_f), sigmoid(b_i), sigmoid(b_o)); GRU: (1 - sigmoid(b_z),
    sigmoid(b_z), sigmoid(b_r)); RNN: (0, 1, 1). For activations with slopes
    other than one at the origin, L is scaled by phi'(0) and R by psi'(0).
    """
    arch = realization.arch if arch is None else as_architecture(arch)
    b = realization.gate_b
    N = realization.N
    if arch.kind == "lstm":
        M, L, R = expit(b["f"]), expit(b["i"]), expit(b["o"])
        comp = expit(-b["f"])
    elif arch.kind == "gru":
        L, R = expit(b["z"]), expit(b["r"])
        M = expit(-b["z"])
        comp = L
    else:
        M, L, R = np.zeros(N), np.ones(N), np.ones(N)
        comp = np.ones(N)
    if arch.phi_prime0 != 1.0:
        L = arch.phi_prime0 * L
    if arch.psi_prime0 != 1.0:
        R = arch.psi_prime0 * R
    return DiagonalTriple(M, L, R, comp)


def _dist2(triple: DiagonalTriple, z) -> np.ndarray:
    if z == 1:
        return triple.complement ** 2
    return np.abs(complex(z) - triple.M) ** 2


def boundary_sum(triple: DiagonalTriple, g: float, z=1.0) -> float:
    """(1/N) sum_i g^2 L_i^2 R_i^2 / |z - M_i|^2; equals one on the support boundary."""
    d2 = _dist2(triple, z)
    if np.any(d2 == 0):
        raise PoleError(f"z = {z} coincides with a diagonal entry of M")
    return float(np.mean(g * g * (triple.L * triple.R) ** 2 / d2))


def regularized_boundary_sum(triple: DiagonalTriple, g: float, z=1.0, r: float = 0.0) -> float:
    """(1/N) sum_i g^2 / (sv_i(z)^2 + r^2) with sv_i(z) = |z - M_i| / (L_i R_i)."""
    if r < 0:
        raise ConfigurationError(f"regularizer must be nonnegative, got {r}")
    if r == 0:
        return boundary_sum(triple, g, z)
    sv2 = _dist2(triple, z) / (triple.L * triple.R) ** 2
    return float(np.mean(g * g / (sv2 + r * r)))


def critical_gain(triple: DiagonalTriple, arch=None, scheme=None) -> CriticalGainPrediction:
    """Finite-N critical gain of one diagonal triple."""
    triple.validate()
    ratio = (triple.L / triple.complement) * triple.R
    s = float(np.mean(ratio * ratio))
    arch = ArchitectureSpec() if arch is None else as_architecture(arch)
    return CriticalGainPrediction(
        g_c=s ** -0.5, arch=arch, scheme=scheme, mode="finite_N",
        details={"N": triple.N, **triple.summary()},
    )


def realization_gain(realization: DisorderRealization) -> CriticalGainPrediction:
    """Finite-N critical gain of a sampled network."""
    triple = extract_MLR(realization)
    pred = critical_gain(triple, realization.arch, realization.bias)
    pred.details.update(seed=realization.seed, replica=realization.replica)
    return pred


# -- Gaussian expectations --------------------------------------------------

def gaussian_expectation(f, s: float, tol: float = 1e-10, start: int = 32,
                         max_order: int = 2**18) -> float:
    """E[f(b)] for b ~ N(0, s^2) by Gauss-Hermite quadrature with order doubling.

    Stops when two successive orders agree to ``tol`` (relative to
    ``max(1, |value|)``); raises :class:`QuadratureError` otherwise.
    """
    if s == 0:
        return float(f(np.zeros(1))[0])
    prev = None
    n = start
    diff = math.inf
    while n <= max_order:
        x, w = roots_hermitenorm(n)
        val = float(np.dot(w, f(s * x)) / _SQRT_2PI)
        if prev is not None:
            diff = abs(val - prev)
            if diff <= tol * max(1.0, abs(val)):
                return val
        prev = val
        n *= 2
    raise QuadratureError(
        f"Gauss-Hermite did not converge for s={s}: last change {diff:.3g}", achieved=diff
    )


def sigma_sq_mean(s_b: float, tol: float = 1e-10) -> float:
    """<sigmoid(b)^2> for b ~ N(0, s_b^2)."""
    if s_b < 0:
        raise ConfigurationError(f"s_b must be nonnegative, got {s_b}")
    if s_b == 0:
        return 0.25
    return gaussian_expectation(lambda b: expit(b) ** 2, s_b, tol)


def inverse_complement_sq_mean(s_b: float, tol: float = 1e-10) -> float:
    """<(1 - sigmoid(b))^-2> = <(1 + e^b)^2> by quadrature."""
    return gaussian_expectation(lambda b: (1.0 + np.exp(b)) ** 2, s_b, tol)


def appendix_a_moment(s_b: float) -> float:
    """Closed form of <(1 - sigmoid(b))^-2> = 1 + 2 exp(s_b^2 / 2) + exp(2 s_b^2)."""
    if s_b < 0:
        raise ConfigurationError(f"s_b must be nonnegative, got {s_b}")
    with np.errstate(over="ignore"):
        val = float(1.0 + 2.0 * np.exp(0.5 * s_b * s_b) + np.exp(2.0 * s_b * s_b))
    if math.isinf(val):
        warnings.warn(f"moment overflows double precision at s_b={s_b}; returning inf",
                      RuntimeWarning, stacklevel=2)
    return val


def gc_gaussian_asymptotic(arch, s_b: float, tol: float = 1e-10) -> CriticalGainPrediction:
    """Large-N critical gain under i.i.d. N(0, s_b^2) gate biases.

    GRU: <sigmoid(b)^2>^(-1/2). LSTM: the expectation of the summand factors
    over the independent forget, input and output biases into
    <sigmoid^2> * <sigmoid^2> * <(1 - sigmoid)^-2>.
    """
    arch = as_architecture(arch)
    if s_b < 0:
        raise ConfigurationError(f"s_b must be nonnegative, got {s_b}")
    scheme = BiasScheme.gaussian(s_b)
    if arch.kind == "rnn":
        s = 1.0
        factors = {}
    elif arch.kind == "gru":
        s = sigma_sq_mean(s_b, tol)
        factors = {"R2_mean": s}
    else:
        sq = sigma_sq_mean(s_b, tol)
        inv = 4.0 if s_b == 0 else inverse_complement_sq_mean(s_b, tol)
        s = sq * sq * inv
        factors = {"L2_mean": sq, "R2_mean": sq, "inv_comp2_mean": inv}
    s *= (arch.phi_prime0 * arch.psi_prime0) ** 2
    return CriticalGainPrediction(g_c=s ** -0.5, arch=arch, scheme=scheme, mode="asymptotic",
                                  details={"quad_tol": tol, **factors})


def gc_asymptotic(arch, scheme: BiasScheme, tol: float = 1e-10) -> CriticalGainPrediction:
    """Large-N critical gain for any supported bias scheme."""
    arch = as_architecture(arch)
    if scheme.variant == "gaussian":
        pred = gc_gaussian_asymptotic(arch, scheme.s_b, tol)
        pred.scheme = scheme
        return pred
    if scheme.variant == "zero":
        base = gc_gaussian_asymptotic(arch, 0.0, tol)
        base.scheme = scheme
        return base
    if arch.kind != "lstm":
        raise ConfigurationError("chrono initialization is only defined for the LSTM")
    # L = 1 - M cancels every timescale; only the output gate remains.
    s_o = scheme.s_o if scheme.output_scheme == "gaussian" else 0.0
    s = sigma_sq_mean(s_o, tol) * (arch.phi_prime0 * arch.psi_prime0) ** 2
    return CriticalGainPrediction(g_c=s ** -0.5, arch=arch, scheme=scheme, mode="asymptotic",
                                  details={"R2_mean": s, "quad_tol": tol})


def monotonicity_check(s_b_grid) -> tuple[bool, float]:
    """Whether ``sigma_sq_mean`` strictly increases along the grid, and the smallest step."""
    grid = np.asarray(s_b_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or np.any(grid < 0):
        raise ConfigurationError("grid must be strictly increasing and nonnegative")
    if grid.size < 2:
        return True, math.inf
    values = np.array([sigma_sq_mean(s) for s in grid])
    margin = float(np.min(np.diff(values)))
    return margin > 0, margin


def max_on_unit_circle(triple: DiagonalTriple, g: float, n_points: int = 10_000,
                       rng=None) -> tuple[float, complex]:
    """Largest sampled boundary sum on the unit circle (verification only)."""
    rng = np.random.default_rng(rng)
    theta = rng.uniform(-math.pi, math.pi, n_points)
    best, arg = -math.inf, 1.0
    for th in theta:
        z = complex(math.cos(th), math.sin(th))
        v = boundary_sum(triple, g, z)
        if v > best:
            best, arg = v, z
    return best, arg
