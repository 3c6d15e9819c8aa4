"""Architecture descriptors for the unified gated recurrent update.

Every model is written as

    h' = A * [(1 - alpha) * h + alpha * phi(c)],
    c  = g * U @ (o * psi(h)) + W @ x + b_c,

and differs only in how the amplitude ``A``, the update rate ``alpha`` and the
recurrent modulator ``o`` are built from sigmoidal gates:

    ====  =======  ===========  ===========  ====  ====
    kind  A        alpha        o            phi   psi
    ====  =======  ===========  ===========  ====  ====
    rnn   1        1            1            tanh  id
    lstm  f + i    i / (f + i)  output gate  tanh  tanh
    gru   1        z            reset gate   tanh  id
    ====  =======  ===========  ===========  ====  ====
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def identity(x):
    return x


def identity_prime(x):
    return np.ones_like(x)


def tanh_prime(x):
    return 1.0 - np.tanh(x) ** 2


# name -> (function, derivative)
ACTIVATIONS = {
    "tanh": (np.tanh, tanh_prime),
    "id": (identity, identity_prime),
}

GATES = {
    "rnn": (),
    "lstm": ("f", "i", "o"),
    "gru": ("z", "r"),
}

_DEFAULT_PSI = {"rnn": "id", "lstm": "tanh", "gru": "id"}


@dataclass(frozen=True)
class ArchitectureSpec:
    """Which model is simulated and with which scalar activations."""

    kind: str = "lstm"
    phi: str = "tanh"
    psi: str | None = None
    gates: tuple = field(init=False)

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in GATES:
            raise ConfigurationError(
                f"unknown architecture {self.kind!r}; expected one of {sorted(GATES)}"
            )
        object.__setattr__(self, "kind", kind)
        if self.psi is None:
            object.__setattr__(self, "psi", _DEFAULT_PSI[kind])
        for name in (self.phi, self.psi):
            if name not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {name!r}")
        object.__setattr__(self, "gates", GATES[kind])

    @property
    def visible_state(self) -> str:
        """Rule producing the state the gates see: ``identity`` or ``output-gated-tanh``."""
        return "output-gated-tanh" if self.kind == "lstm" else "identity"

    def phi_fn(self, x):
        return ACTIVATIONS[self.phi][0](x)

    def psi_fn(self, x):
        return ACTIVATIONS[self.psi][0](x)

    @property
    def phi_prime0(self) -> float:
        return float(ACTIVATIONS[self.phi][1](np.zeros(1))[0])

    @property
    def psi_prime0(self) -> float:
        return float(ACTIVATIONS[self.psi][1](np.zeros(1))[0])


def as_architecture(arch) -> ArchitectureSpec:
    if isinstance(arch, ArchitectureSpec):
        return arch
    return ArchitectureSpec(str(arch))
