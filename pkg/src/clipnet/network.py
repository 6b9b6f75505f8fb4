"""Fully connected networks: evaluation, parameter management, exact gradients.

A network is described by an :class:`MlpSpec` (architecture) plus
:class:`NetworkParams` (weights and biases).  The parameter vector view used
throughout the optimizer is the flat layout produced by :func:`flatten`:
layer by layer, the weight matrix with its columns concatenated, then the
bias vector.

All arithmetic is 64-bit.  Functions here are pure and safe to call from
several threads at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .activations import ActivationKind, relu


class LayerShapeError(ValueError):
    """Parameter shapes do not match the architecture; names the layer."""

    def __init__(self, layer: int, expected, got):
        self.layer = layer
        super().__init__(
            f"layer {layer}: expected shape {expected}, got {got}"
        )


class NonFiniteError(ArithmeticError):
    """A forward or backward pass produced a non-finite value."""

    def __init__(self, layer: int, theta_norm: float):
        self.layer = layer
        self.theta_norm = theta_norm
        super().__init__(
            f"non-finite values first appear at layer {layer} "
            f"(max |theta| = {theta_norm:g})"
        )


@dataclass(frozen=True)
class MlpSpec:
    """Architecture descriptor for a scalar-output fully connected network."""

    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int = 1
    activation: ActivationKind = field(default_factory=relu)
    output_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden_widths must be nonempty with all widths >= 1")
        if self.output_dim != 1:
            raise ValueError("only scalar outputs are supported")
        if self.output_bound is not None and self.output_bound <= 0:
            raise ValueError("output_bound must be positive when set")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def width(self) -> int:
        return max(self.hidden_widths)

    @property
    def dims(self) -> np.ndarray:
        """Layer widths [d, n_1, ..., n_L, 1] as the kernels expect them."""
        return np.array((self.input_dim, *self.hidden_widths, self.output_dim), dtype=np.int64)


@dataclass
class NetworkParams:
    """Weight matrices (n_l x n_{l-1}) and bias vectors, one pair per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def param_count(spec: MlpSpec) -> int:
    dims = spec.dims
    return int(np.sum(dims[1:] * dims[:-1] + dims[1:]))


def validate_params(params: NetworkParams, spec: MlpSpec) -> None:
    dims = spec.dims
    nlayers = len(dims) - 1
    if len(params.weights) != nlayers or len(params.biases) != nlayers:
        raise LayerShapeError(0, f"{nlayers} layers", f"{len(params.weights)} weight blocks")
    for l in range(nlayers):
        expected = (int(dims[l + 1]), int(dims[l]))
        if params.weights[l].shape != expected:
            raise LayerShapeError(l + 1, expected, params.weights[l].shape)
        if params.biases[l].shape != (expected[0],):
            raise LayerShapeError(l + 1, (expected[0],), params.biases[l].shape)


def flatten(params: NetworkParams) -> np.ndarray:
    """Flat vector view: per layer, vec(W) column-concatenated, then the bias."""
    pieces = []
    for w, b in zip(params.weights, params.biases):
        pieces.append(np.asarray(w, dtype=np.float64).T.ravel())
        pieces.append(np.asarray(b, dtype=np.float64).ravel())
    return np.concatenate(pieces)


def unflatten(spec: MlpSpec, vector: np.ndarray) -> NetworkParams:
    vector = np.asarray(vector, dtype=np.float64)
    p = param_count(spec)
    if vector.shape != (p,):
        raise ValueError(f"expected a vector of length {p}, got shape {vector.shape}")
    dims = spec.dims
    weights, biases = [], []
    off = 0
    for l in range(len(dims) - 1):
        din = int(dims[l])
        dout = int(dims[l + 1])
        weights.append(vector[off:off + din * dout].reshape(din, dout).T.copy())
        off += din * dout
        biases.append(vector[off:off + dout].copy())
        off += dout
    return NetworkParams(weights, biases)


def init_params(spec: MlpSpec, seed: int) -> NetworkParams:
    """Uniform fan-based initialization, biases zero, reproducible per seed."""
    rng = np.random.default_rng(seed)
    dims = spec.dims
    weights, biases = [], []
    for l in range(len(dims) - 1):
        fan_in = int(dims[l])
        fan_out = int(dims[l + 1])
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases)


def _as_theta(params, spec: MlpSpec) -> np.ndarray:
    if isinstance(params, NetworkParams):
        validate_params(params, spec)
        return flatten(params)
    theta = np.ascontiguousarray(params, dtype=np.float64)
    if theta.shape != (param_count(spec),):
        raise ValueError(
            f"flat parameter must have length {param_count(spec)}, got shape {theta.shape}"
        )
    return theta


def forward(params, spec: MlpSpec, x, clamp: bool = False) -> float:
    """Evaluate the network at a single input vector.

    With ``clamp=True`` and an output bound F on the spec, the value is
    clipped to [-F, F].  Training never clamps.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_dim,):
        raise LayerShapeError(0, (spec.input_dim,), x.shape)
    out = forward_batch(params, spec, x[None, :], clamp=clamp)
    return float(out[0])


def forward_batch(params, spec: MlpSpec, X, clamp: bool = False) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise LayerShapeError(0, (None, spec.input_dim), X.shape)
    theta = _as_theta(params, spec)
    act = spec.activation
    out = _kernels.forward_batch(theta, spec.dims, X, act.code, act.param)
    if clamp and spec.output_bound is not None:
        out = np.clip(out, -spec.output_bound, spec.output_bound)
    return out


def _locate_nonfinite_layer(theta: np.ndarray, spec: MlpSpec, X: np.ndarray) -> int:
    """Replay the forward pass per layer to name the first bad one."""
    from .activations import act_value

    dims = spec.dims
    A = X
    off = 0
    with np.errstate(all="ignore"):
        for l in range(len(dims) - 1):
            din, dout = int(dims[l]), int(dims[l + 1])
            Wt = theta[off:off + din * dout].reshape(din, dout)
            b = theta[off + din * dout:off + din * dout + dout]
            off += din * dout + dout
            Z = A @ Wt + b
            if not np.all(np.isfinite(Z)):
                return l + 1
            A = act_value(spec.activation.code, spec.activation.param, Z) if l < len(dims) - 2 else Z
    return len(dims) - 1


def grad(params, spec: MlpSpec, loss, X, y) -> np.ndarray:
    """Exact gradient of the mean loss over the batch, as a flat vector."""
    risk, g = risk_and_grad(params, spec, loss, X, y)
    return g


def risk_and_grad(params, spec: MlpSpec, loss, X, y):
    """Mean loss and its gradient in one fused pass."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise LayerShapeError(0, (None, spec.input_dim), X.shape)
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if y.shape != (X.shape[0],):
        raise ValueError(f"targets must have shape ({X.shape[0]},), got {y.shape}")
    loss.check_targets(y)
    theta = _as_theta(params, spec)
    act = spec.activation
    risk, g = _kernels.risk_grad(theta, spec.dims, X, y, act.code, act.param, loss.code)
    if not np.isfinite(risk) or not np.all(np.isfinite(g)):
        layer = _locate_nonfinite_layer(theta, spec, X)
        raise NonFiniteError(layer, float(np.max(np.abs(theta))))
    return risk, g
