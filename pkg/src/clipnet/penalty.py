"""The clipped-L1 penalty, its convex-concave split, and the two objectives.

The penalty on a flat parameter vector is ``lam * sum_j min(|theta_j|/tau, 1)``,
a continuous surrogate of the nonzero count that saturates at one per
coordinate beyond the clipping threshold ``tau``.  Training minimizes the
penalized objective Q = risk + penalty through a sequence of convex
surrogates: at an anchor point the concave part of the penalty is replaced
by its tangent, leaving an L1-penalized majorant that is tight at the
anchor.

Boundary conventions follow the definitions verbatim: the tangent sign
vector uses a strict ``|theta_j| > tau`` test while the concave part of the
decomposition uses ``>=``; they differ only on a measure-zero set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PenaltyConfig:
    """Strength and clipping threshold of the penalty."""

    lam: float
    tau: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


def clipped_norm(theta: np.ndarray, tau: float) -> float:
    """sum_j min(|theta_j| / tau, 1)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    return float(np.sum(np.minimum(np.abs(theta) / tau, 1.0)))


def active_signs(theta: np.ndarray, tau: float) -> np.ndarray:
    """sign(theta_j) where |theta_j| strictly exceeds tau, else 0.

    This is the gradient of the concave part of the penalty at the current
    iterate; it is held fixed while the convex surrogate is minimized.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    return np.sign(theta) * (np.abs(theta) > tau)


def concave_part(theta: np.ndarray, tau: float) -> float:
    """-(1/tau) * sum_j (|theta_j| - tau) over coordinates with |theta_j| >= tau."""
    theta = np.asarray(theta, dtype=np.float64)
    a = np.abs(theta)
    return float(-np.sum((a - tau) * (a >= tau)) / tau)


def penalized_objective(theta: np.ndarray, risk: float, cfg: PenaltyConfig) -> float:
    """Q: empirical risk plus the clipped-L1 penalty."""
    return risk + cfg.lam * clipped_norm(theta, cfg.tau)


def surrogate_objective(theta, theta_anchor, risk_at_theta: float, cfg: PenaltyConfig) -> float:
    """Convex majorant Q* of Q, tight at the anchor point.

    Exchanging the concave part for its tangent at the anchor gives, per
    coordinate, (lam/tau)|theta_j| - (lam/tau) h_j theta_j + lam for anchored
    coordinates with |anchor_j| > tau and (lam/tau)|theta_j| otherwise, where
    h = active_signs(anchor, tau).  The constant term counts one lam per
    active coordinate so that Q*(anchor | anchor) = Q(anchor) exactly and
    Q*(theta | anchor) >= Q(theta) everywhere.
    """
    theta = np.asarray(theta, dtype=np.float64)
    theta_anchor = np.asarray(theta_anchor, dtype=np.float64)
    if theta.shape != theta_anchor.shape:
        raise ValueError("theta and the anchor must have equal length")
    h = active_signs(theta_anchor, cfg.tau)
    ratio = cfg.lam / cfg.tau
    n_active = float(np.count_nonzero(h))
    return (
        risk_at_theta
        - ratio * float(h @ theta)
        + cfg.lam * n_active
        + ratio * float(np.sum(np.abs(theta)))
    )
