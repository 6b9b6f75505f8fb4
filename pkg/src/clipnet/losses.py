"""Loss functions for regression and margin-based classification.

The square loss takes real targets; logistic and exponential are strictly
convex margin losses and require labels in {-1, +1}.  The logistic loss is
evaluated through a softplus form so large margins cannot overflow, and the
exponential loss is clamped at 1e300 instead of returning infinity (check
:func:`exp_overflow` to detect when the clamp was active).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels_np import EXP_CLAMP, _EXP_ARG_CAP


@dataclass(frozen=True)
class LossKind:
    name: str
    code: int
    margin_based: bool

    def check_targets(self, y: np.ndarray) -> None:
        if self.margin_based and not np.all(np.abs(y) == 1.0):
            raise ValueError(f"{self.name} loss requires labels in {{-1, +1}}")


SQUARE = LossKind("square", 0, False)
LOGISTIC = LossKind("logistic", 1, True)
EXPONENTIAL = LossKind("exponential", 2, True)

_BY_NAME = {k.name: k for k in (SQUARE, LOGISTIC, EXPONENTIAL)}


def by_name(name: str) -> LossKind:
    key = name.strip().lower()
    if key not in _BY_NAME:
        raise ValueError(f"unknown loss '{name}' (choices: {sorted(_BY_NAME)})")
    return _BY_NAME[key]


def loss_value(kind: LossKind, y, f):
    """Pointwise loss; vectorizes over matching-shape arrays."""
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    kind.check_targets(np.atleast_1d(y))
    out = _kernels.loss_values(np.atleast_1d(y), np.atleast_1d(f), kind.code)
    return float(out[0]) if out.size == 1 and y.ndim == 0 else out.reshape(np.broadcast(y, f).shape)


def loss_deriv(kind: LossKind, y, f):
    """Pointwise derivative of the loss in its prediction argument."""
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    kind.check_targets(np.atleast_1d(y))
    out = _kernels.loss_derivs(np.atleast_1d(y), np.atleast_1d(f), kind.code)
    return float(out[0]) if out.size == 1 and y.ndim == 0 else out.reshape(np.broadcast(y, f).shape)


def exp_overflow(y, f) -> bool:
    """True when the exponential loss would exceed its 1e300 clamp."""
    m = np.asarray(y, dtype=np.float64) * np.asarray(f, dtype=np.float64)
    return bool(np.any(-m > _EXP_ARG_CAP))


def empirical_risk(params, spec, kind: LossKind, X, y) -> float:
    """Mean loss of the network over a dataset."""
    from .network import forward_batch

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empirical risk needs at least one sample")
    kind.check_targets(y)
    f = forward_batch(params, spec, X)
    return float(np.mean(_kernels.loss_values(y, f, kind.code)))
