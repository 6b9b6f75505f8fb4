"""Executable calculators and empirical verifiers for the quantitative bounds.

Three families live here:

* metric-entropy calculators for sparse network classes, in the plain form
  ``2 S (L+1) log((L+1)(N+1)B / delta)`` and the clipped-norm variant where
  the covering radius is first reduced by ``tau`` times the parameter
  Lipschitz factor;
* an empirical check that two networks with bounded parameters differ in
  sup norm by at most ``(L+1)((N+1)B)^{L+1}`` times the sup-norm parameter
  distance (requires a 1-Lipschitz activation vanishing at zero);
* the one-node identity approximator ``(K/rho'(t)) [rho(x/K + t) - rho(t)]``
  for locally quadratic activations, with the scale K found by doubling
  until a measured error target is met.

Sup norms are approximated by maxima over deterministic lattices; the
bounds are one-sided, so a lattice maximum can never fake a violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .activations import LOCALLY_QUADRATIC, ActivationKind
from .network import MlpSpec, NetworkParams, flatten, forward_batch, param_count


@dataclass(frozen=True)
class ClassParams:
    """Architecture and budget parameters of a sparse network class."""

    L: int
    N: int
    B: float
    S: float
    delta: float
    tau: float = 0.0
    F: float | None = None

    def __post_init__(self):
        if self.L < 0 or self.N < 1:
            raise ValueError("need depth L >= 0 and width N >= 1")
        if self.B < 1:
            raise ValueError("parameter bound B must be at least 1")
        if self.delta <= 0:
            raise ValueError("covering radius delta must be positive")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")


class CoveringBound(NamedTuple):
    value: float
    vacuous: bool


def covering_bound(p: ClassParams) -> CoveringBound:
    """Entropy bound 2 S (L+1) log((L+1)(N+1)B / delta).

    Negative (flagged vacuous) when delta exceeds (L+1)(N+1)B; the value is
    returned as-is.
    """
    scale = (p.L + 1) * (p.N + 1) * p.B
    value = 2.0 * p.S * (p.L + 1) * math.log(scale / p.delta)
    return CoveringBound(value, value < 0.0)


def covering_bound_clipped(p: ClassParams) -> CoveringBound:
    """Entropy bound for a clipped-norm ball, radius shrunk by tau * zeta.

    Requires delta > tau * (L+1)((N+1)B)^{L+1}; reduces to
    :func:`covering_bound` at tau = 0.
    """
    zeta = lipschitz_bound(p.L, p.N, p.B)
    if p.delta <= p.tau * zeta:
        raise ValueError(
            f"delta must exceed tau * {zeta:g} = {p.tau * zeta:g}, got {p.delta:g}"
        )
    scale = (p.L + 1) * (p.N + 1) * p.B
    value = 2.0 * p.S * (p.L + 1) * math.log(scale / (p.delta - p.tau * zeta))
    return CoveringBound(value, value < 0.0)


def lipschitz_bound(L: int, N: int, B: float) -> float:
    """Sup-norm sensitivity of the network output to its parameter vector."""
    if B < 1:
        raise ValueError("parameter bound B must be at least 1")
    return (L + 1) * ((N + 1) * B) ** (L + 1)


def input_grid(d: int, size: int) -> np.ndarray:
    """Deterministic lattice on the unit cube with roughly ``size`` points."""
    per_axis = max(2, round(size ** (1.0 / d)))
    axes = [np.linspace(0.0, 1.0, per_axis)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class LipschitzReport:
    trials: int
    violations: int
    max_ratio: float
    bound: float
    grid_points: int


def verify_lipschitz(spec: MlpSpec, B: float, trials: int, grid_size: int,
                     seed: int) -> LipschitzReport:
    """Sample parameter pairs with entries in [-B, B] and test the bound.

    The activation must be 1-Lipschitz with value 0 at the origin (relu is
    the canonical case), otherwise the bound does not apply as stated.
    """
    act = spec.activation
    if act.lipschitz > 1.0 or float(act.value(0.0)) != 0.0:
        raise ValueError(
            f"activation '{act.name}' is not 1-Lipschitz with value 0 at 0"
        )
    if B < 1:
        raise ValueError("parameter bound B must be at least 1")
    bound = lipschitz_bound(spec.depth, spec.width, B)
    grid = input_grid(spec.input_dim, grid_size)
    p = param_count(spec)
    rng = np.random.default_rng(seed)

    violations = 0
    max_ratio = 0.0
    for _ in range(trials):
        theta1 = rng.uniform(-B, B, size=p)
        theta2 = rng.uniform(-B, B, size=p)
        gap = float(np.max(np.abs(
            forward_batch(theta1, spec, grid) - forward_batch(theta2, spec, grid)
        )))
        allowed = bound * float(np.max(np.abs(theta1 - theta2)))
        if allowed == 0.0:
            ratio = 0.0 if gap == 0.0 else math.inf
        else:
            ratio = gap / allowed
        if ratio > 1.0:
            violations += 1
        max_ratio = max(max_ratio, ratio)
    return LipschitzReport(trials, violations, max_ratio, bound, grid.shape[0])


# Expansion points where each locally quadratic activation has nonzero
# first and second derivatives.
DEFAULT_EXPANSION_POINTS = {
    "sigmoid": 1.0,
    "tanh": 0.5,
    "softplus": 0.0,
    "swish": 0.0,
    "elu": -1.0,
    "softsign": 1.0,
    "isru": 1.0,
    "isrlu": -1.0,
}


def second_derivative(act: ActivationKind, t: float, step: float = 1e-5) -> float:
    """Central difference of the activation's first derivative."""
    return float(act.deriv(t + step) - act.deriv(t - step)) / (2.0 * step)


@dataclass
class IdentityConstruction:
    """One-hidden-node network approximating the identity on [-delta, 1+delta]."""

    params: NetworkParams
    spec: MlpSpec
    scale: float
    c1: float
    t: float
    sup_error: float
    epsilon: float
    delta: float


def identity_params(act: ActivationKind, t: float, scale: float) -> tuple[NetworkParams, MlpSpec]:
    """Build the one-node net (K/rho'(t)) [rho(x/K + t) - rho(t)] at K = scale."""
    slope = float(act.deriv(t))
    value = float(act.value(t))
    outer = scale / slope
    params = NetworkParams(
        weights=[np.array([[1.0 / scale]]), np.array([[outer]])],
        biases=[np.array([t]), np.array([-outer * value])],
    )
    spec = MlpSpec(input_dim=1, hidden_widths=(1,), activation=act)
    return params, spec


def identity_error(act: ActivationKind, t: float, scale: float, delta: float,
                   grid_points: int = 10_000) -> float:
    """Lattice sup of |f(x) - x| over [-delta, 1 + delta] for the construction."""
    params, spec = identity_params(act, t, scale)
    xs = np.linspace(-delta, 1.0 + delta, grid_points)
    preds = forward_batch(flatten(params), spec, xs[:, None])
    return float(np.max(np.abs(preds - xs)))


def identity_net(delta: float, epsilon: float, activation: ActivationKind,
                 t: float | None = None, grid_points: int = 10_000) -> IdentityConstruction:
    """Construct an identity approximator with measured error at most epsilon.

    Starting from K = (1 + delta)^2 / epsilon, K doubles until the lattice
    error over [-delta, 1 + delta] drops to epsilon; the implied front
    constant is reported as ``c1``.  Piecewise linear activations have no
    curvature to expand against and are rejected.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if activation.family != LOCALLY_QUADRATIC:
        raise ValueError(
            f"activation '{activation.name}' has no usable second derivative"
        )
    if t is None:
        t = DEFAULT_EXPANSION_POINTS[activation.name]
    slope = float(activation.deriv(t))
    curvature = second_derivative(activation, t)
    if abs(slope) < 1e-8 or abs(curvature) < 1e-6:
        raise ValueError(
            f"expansion point t={t:g} has rho'={slope:.3g}, rho''={curvature:.3g}; "
            "both must be nonzero"
        )

    scale = (1.0 + delta) ** 2 / epsilon
    err = identity_error(activation, t, scale, delta, grid_points)
    doublings = 0
    while err > epsilon and doublings < 60:
        scale *= 2.0
        doublings += 1
        err = identity_error(activation, t, scale, delta, grid_points)
    if err > epsilon:
        raise RuntimeError(
            f"identity construction failed to reach error {epsilon:g} "
            f"(last error {err:g})"
        )
    params, spec = identity_params(activation, t, scale)
    c1 = scale * epsilon / (1.0 + delta) ** 2
    return IdentityConstruction(params, spec, scale, c1, t, err, epsilon, delta)


def hard_threshold(theta, tau: float) -> np.ndarray:
    """Zero every coordinate with magnitude at most tau, keep the rest."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    theta = np.asarray(theta, dtype=np.float64)
    return theta * (np.abs(theta) > tau)
