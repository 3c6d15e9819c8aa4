"""Seed-deterministic sampling of the quenched disorder.

Every random component of a network (each weight matrix and each bias
vector) is drawn from its own PCG64 stream. Streams are derived with
:class:`numpy.random.SeedSequence` from ``(seed, replica, crc32(label))``, so
adding or resampling one component never shifts the draws of another.
Gaussian variates come from :meth:`numpy.random.Generator.standard_normal`
(the ziggurat method), scaled by the standard deviation.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .architecture import ArchitectureSpec, as_architecture
from .errors import ConfigurationError

BIAS_VARIANTS = ("zero", "gaussian", "chrono")


@dataclass(frozen=True)
class BiasScheme:
    """Gate-bias initialization plus the (separate) candidate-bias scale ``s_c``.

    ``variant`` is one of ``zero``, ``gaussian`` (gate biases ~ N(0, s_b^2)) or
    ``chrono`` (LSTM only; forget bias log(tau - 1) with tau ~ U(2, t_max),
    input bias tied to minus the forget bias, output bias zero or N(0, s_o^2)).
    """

    variant: str = "zero"
    s_b: float = 0.0
    s_c: float = 0.0
    t_max: float = 100.0
    output_scheme: str = "zero"
    s_o: float = 0.0

    def __post_init__(self):
        variant = self.variant.lower()
        object.__setattr__(self, "variant", variant)
        if variant not in BIAS_VARIANTS:
            raise ConfigurationError(
                f"unknown bias scheme {self.variant!r}; expected one of {BIAS_VARIANTS}"
            )
        if not (self.s_b >= 0 and np.isfinite(self.s_b)):
            raise ConfigurationError(f"s_b must be a finite nonnegative number, got {self.s_b}")
        if not (self.s_c >= 0 and np.isfinite(self.s_c)):
            raise ConfigurationError(f"s_c must be a finite nonnegative number, got {self.s_c}")
        if variant == "chrono":
            if not self.t_max > 2:
                raise ConfigurationError(f"chrono requires t_max > 2, got {self.t_max}")
            if self.output_scheme not in ("zero", "gaussian"):
                raise ConfigurationError(
                    f"chrono output_scheme must be 'zero' or 'gaussian', got {self.output_scheme!r}"
                )
            if not self.s_o >= 0:
                raise ConfigurationError(f"s_o must be nonnegative, got {self.s_o}")

    @classmethod
    def zero(cls, s_c=0.0):
        return cls("zero", s_c=s_c)

    @classmethod
    def gaussian(cls, s_b, s_c=0.0):
        return cls("gaussian", s_b=s_b, s_c=s_c)

    @classmethod
    def chrono(cls, t_max, output_scheme="zero", s_o=0.0, s_c=0.0):
        return cls("chrono", t_max=t_max, output_scheme=output_scheme, s_o=s_o, s_c=s_c)

    def describe(self) -> dict:
        out = {"bias": self.variant, "s_c": self.s_c}
        if self.variant == "gaussian":
            out["s_b"] = self.s_b
        elif self.variant == "chrono":
            out.update(t_max=self.t_max, output_scheme=self.output_scheme, s_o=self.s_o)
        return out


@dataclass(frozen=True)
class NetworkConfig:
    """Everything needed to sample one network realization."""

    arch: ArchitectureSpec = field(default_factory=ArchitectureSpec)
    N: int = 1000
    K: int = 1
    bias: BiasScheme = field(default_factory=BiasScheme)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "arch", as_architecture(self.arch))
        if int(self.N) < 1 or int(self.K) < 1:
            raise ConfigurationError(f"N and K must be positive, got N={self.N}, K={self.K}")
        if self.bias.variant == "chrono" and self.arch.kind != "lstm":
            raise ConfigurationError("chrono initialization is only defined for the LSTM")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def replace(self, **changes) -> "NetworkConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class DisorderRealization:
    """One frozen draw of all weights and biases of a network."""

    U: np.ndarray
    W: np.ndarray
    gate_U: dict
    gate_W: dict
    b_c: np.ndarray
    gate_b: dict
    seed: int
    replica: int
    N: int
    K: int
    arch: ArchitectureSpec
    bias: BiasScheme
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def s_c_is_zero(self) -> bool:
        return not np.any(self.b_c)


def substream(seed: int, label: str, replica: int = 0) -> np.random.Generator:
    """Independent generator for one named component of one replica."""
    key = (int(replica), zlib.crc32(label.encode("utf8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def sample_weights(rows: int, cols: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. N(0, variance) matrix of shape (rows, cols)."""
    if int(rows) < 1 or int(cols) < 1:
        raise ConfigurationError(f"matrix dimensions must be positive, got {rows}x{cols}")
    if not variance > 0:
        raise ConfigurationError(f"variance must be positive, got {variance}")
    return np.sqrt(variance) * rng.standard_normal((int(rows), int(cols)))


def sample_biases(scheme: BiasScheme, gate_id: str, N: int, rng: np.random.Generator) -> np.ndarray:
    """Bias vector for one gate (``'c'`` for the candidate).

    Under chrono the forget and input biases are tied through the shared
    timescale draw, so both must be requested with generators in the same
    state (``realize`` uses the ``chrono_tau`` substream for each).
    """
    if gate_id == "c":
        if scheme.s_c == 0:
            return np.zeros(N)
        return scheme.s_c * rng.standard_normal(N)
    if scheme.variant == "zero":
        return np.zeros(N)
    if scheme.variant == "gaussian":
        if scheme.s_b == 0:
            return np.zeros(N)
        return scheme.s_b * rng.standard_normal(N)
    # chrono
    if gate_id not in ("f", "i", "o"):
        raise ConfigurationError(f"chrono initialization is LSTM-only; got gate {gate_id!r}")
    if gate_id == "o":
        if scheme.output_scheme == "zero" or scheme.s_o == 0:
            return np.zeros(N)
        return scheme.s_o * rng.standard_normal(N)
    tau = rng.uniform(2.0, scheme.t_max, size=N)
    b_f = np.log(tau - 1.0)
    return b_f if gate_id == "f" else -b_f


def realize(config: NetworkConfig, replica: int = 0) -> DisorderRealization:
    """Sample every matrix and bias vector of ``config`` for one replica."""
    arch, N, K, scheme, seed = config.arch, int(config.N), int(config.K), config.bias, config.seed

    def rng(label):
        return substream(seed, label, replica)

    U = sample_weights(N, N, 1.0 / N, rng("U"))
    W = sample_weights(N, K, 1.0 / K, rng("W"))
    gate_U = {g: sample_weights(N, N, 1.0 / N, rng("U_" + g)) for g in arch.gates}
    gate_W = {g: sample_weights(N, K, 1.0 / K, rng("W_" + g)) for g in arch.gates}
    gate_b = {}
    for g in arch.gates:
        label = "chrono_tau" if scheme.variant == "chrono" and g in ("f", "i") else "b_" + g
        gate_b[g] = sample_biases(scheme, g, N, rng(label))
    b_c = sample_biases(scheme, "c", N, rng("b_c"))
    return DisorderRealization(
        U=U, W=W, gate_U=gate_U, gate_W=gate_W, b_c=b_c, gate_b=gate_b,
        seed=int(seed), replica=int(replica), N=N, K=K, arch=arch, bias=scheme,
    )
