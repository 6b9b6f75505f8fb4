"""Activation function catalogue for fully connected networks.

Each activation records its pointwise value and derivative, the family it
belongs to (piecewise linear or locally quadratic) and a global Lipschitz
constant on the real line.  The integer ``code`` is the dispatch id shared
with the compiled kernels in :mod:`clipnet._kernels_nb`.

At kink points of the piecewise linear activations the derivative takes the
left-hand value (0 for relu at the origin, the slope ``a`` for leaky relu).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIECEWISE_LINEAR = "piecewise-linear"
LOCALLY_QUADRATIC = "locally-quadratic"

# Kernel dispatch codes.  Keep in sync with _kernels_nb._act / _act_deriv.
RELU = 0
LEAKY_RELU = 1
SIGMOID = 2
TANH = 3
SOFTPLUS = 4
SWISH = 5
ELU = 6
SOFTSIGN = 7
ISRU = 8
ISRLU = 9

# sup of d/dz [z * sigmoid(z)], attained near z = 2.3994
_SWISH_LIPSCHITZ = 1.0998393201288669


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0.0)


def act_value(code: int, a: float, z):
    """Apply the activation with the given dispatch code elementwise."""
    z = np.asarray(z, dtype=np.float64)
    if code == RELU:
        return np.maximum(z, 0.0)
    if code == LEAKY_RELU:
        return np.where(z > 0, z, a * z)
    if code == SIGMOID:
        return _sigmoid(z)
    if code == TANH:
        return np.tanh(z)
    if code == SOFTPLUS:
        return _softplus(z)
    if code == SWISH:
        return z * _sigmoid(z)
    if code == ELU:
        return np.where(z > 0, z, a * np.expm1(np.minimum(z, 0.0)))
    if code == SOFTSIGN:
        return z / (1.0 + np.abs(z))
    if code == ISRU:
        return z / np.sqrt(1.0 + a * z * z)
    if code == ISRLU:
        return np.where(z > 0, z, z / np.sqrt(1.0 + a * np.minimum(z, 0.0) ** 2))
    raise ValueError(f"unknown activation code {code}")


def act_deriv(code: int, a: float, z):
    """Pointwise derivative, evaluated from the pre-activation."""
    z = np.asarray(z, dtype=np.float64)
    if code == RELU:
        return (z > 0).astype(np.float64)
    if code == LEAKY_RELU:
        return np.where(z > 0, 1.0, a)
    if code == SIGMOID:
        s = _sigmoid(z)
        return s * (1.0 - s)
    if code == TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    if code == SOFTPLUS:
        return _sigmoid(z)
    if code == SWISH:
        s = _sigmoid(z)
        return s * (1.0 + z * (1.0 - s))
    if code == ELU:
        return np.where(z > 0, 1.0, a * np.exp(np.minimum(z, 0.0)))
    if code == SOFTSIGN:
        return 1.0 / (1.0 + np.abs(z)) ** 2
    if code == ISRU:
        return (1.0 + a * z * z) ** -1.5
    if code == ISRLU:
        return np.where(z > 0, 1.0, (1.0 + a * np.minimum(z, 0.0) ** 2) ** -1.5)
    raise ValueError(f"unknown activation code {code}")


@dataclass(frozen=True)
class ActivationKind:
    """One entry of the activation catalogue.

    ``param`` is the shape parameter ``a`` for the parametric activations
    (leaky relu, elu, isru, isrlu) and is ignored by the rest.
    """

    name: str
    code: int
    family: str
    lipschitz: float
    param: float = 0.0

    def value(self, z):
        return act_value(self.code, self.param, z)

    def deriv(self, z):
        return act_deriv(self.code, self.param, z)


def relu() -> ActivationKind:
    return ActivationKind("relu", RELU, PIECEWISE_LINEAR, 1.0)


def leaky_relu(a: float = 0.01) -> ActivationKind:
    if not 0.0 < a < 1.0:
        raise ValueError("leaky relu slope must lie in (0, 1)")
    return ActivationKind("leaky_relu", LEAKY_RELU, PIECEWISE_LINEAR, 1.0, a)


def sigmoid() -> ActivationKind:
    return ActivationKind("sigmoid", SIGMOID, LOCALLY_QUADRATIC, 0.25)


def tanh() -> ActivationKind:
    return ActivationKind("tanh", TANH, LOCALLY_QUADRATIC, 1.0)


def softplus() -> ActivationKind:
    return ActivationKind("softplus", SOFTPLUS, LOCALLY_QUADRATIC, 1.0)


def swish() -> ActivationKind:
    return ActivationKind("swish", SWISH, LOCALLY_QUADRATIC, _SWISH_LIPSCHITZ)


def elu(a: float = 1.0) -> ActivationKind:
    if a <= 0:
        raise ValueError("elu scale must be positive")
    return ActivationKind("elu", ELU, LOCALLY_QUADRATIC, max(1.0, a), a)


def softsign() -> ActivationKind:
    return ActivationKind("softsign", SOFTSIGN, LOCALLY_QUADRATIC, 1.0)


def isru(a: float = 1.0) -> ActivationKind:
    if a <= 0:
        raise ValueError("isru scale must be positive")
    return ActivationKind("isru", ISRU, LOCALLY_QUADRATIC, 1.0, a)


def isrlu(a: float = 1.0) -> ActivationKind:
    if a <= 0:
        raise ValueError("isrlu scale must be positive")
    return ActivationKind("isrlu", ISRLU, LOCALLY_QUADRATIC, 1.0, a)


_FACTORIES = {
    "relu": relu,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "softplus": softplus,
    "swish": swish,
    "elu": elu,
    "softsign": softsign,
    "isru": isru,
    "isrlu": isrlu,
}


def by_name(name: str, a: float | None = None) -> ActivationKind:
    """Look an activation up by name, e.g. for CLI and config files."""
    key = name.strip().lower().replace("-", "_")
    if key not in _FACTORIES:
        raise ValueError(f"unknown activation '{name}' (choices: {sorted(_FACTORIES)})")
    factory = _FACTORIES[key]
    if a is None:
        return factory()
    if key in ("leaky_relu", "elu", "isru", "isrlu"):
        return factory(a)
    return factory()


def all_kinds() -> list[ActivationKind]:
    """One instance of every catalogue entry, default parameters."""
    return [factory() for factory in _FACTORIES.values()]
