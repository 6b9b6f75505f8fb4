"""Training loops: outer surrogate refresh with an inner proximal-gradient loop.

Each outer iteration freezes the tangent sign vector of the penalty's
concave part at the current iterate and minimizes the resulting convex
surrogate with proximal-gradient steps.  The per-coordinate update is a
soft-thresholded gradient step, so iterates contain exact zeros and the
model sparsifies during training rather than through post-hoc pruning.

The inner loop stops at the first step whose surrogate value is no worse
than the surrogate at the anchor (which equals the penalized objective
there), or after ``max_inner_steps`` extra steps.  Two acceptance policies
are provided:

* ``strict`` (default): if the inner loop exhausts its budget without
  reaching the anchor value, the step is rejected, the learning rate is
  halved and the loop retried, up to 20 halvings.  This guarantees a
  monotonically nonincreasing objective trace.
* ``accept-all``: the last inner iterate is accepted unconditionally.

An Adam optimizer on the bare empirical risk is included for the non-sparse
baseline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .losses import LossKind
from .network import (
    MlpSpec,
    NetworkParams,
    flatten,
    init_params,
    unflatten,
    validate_params,
)
from .penalty import PenaltyConfig, active_signs, clipped_norm

MONOTONE_POLICIES = ("strict", "accept-all")
_MAX_HALVINGS = 20


class DivergenceError(ArithmeticError):
    """Training produced a non-finite iterate or objective.

    Carries the outer iteration index and the trace recorded so far.
    """

    def __init__(self, message: str, outer_iter: int, trace: list):
        super().__init__(f"{message} (outer iteration {outer_iter})")
        self.outer_iter = outer_iter
        self.trace = trace


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for both training loops.

    ``batch_size=None`` means full-batch gradients.  When mini-batching,
    every inner step draws one fresh shuffled batch while objectives for
    the stopping rule stay full-batch.  ``early_stop_patience`` is off by
    default; the experiment harness enables it.
    """

    learning_rate: float = 1e-2
    max_inner_steps: int = 5
    outer_iters: int = 500
    batch_size: int | None = None
    monotone_policy: str = "strict"
    seed: int = 0
    early_stop_patience: int | None = None
    early_stop_rel_tol: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_inner_steps < 1:
            raise ValueError("max_inner_steps must be at least 1")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be at least 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive when set")
        if self.monotone_policy not in MONOTONE_POLICIES:
            raise ValueError(f"monotone_policy must be one of {MONOTONE_POLICIES}")


@dataclass
class FitFlags:
    stalled: bool = False
    early_stopped: bool = False
    completed_all_iters: bool = False


@dataclass
class FitReport:
    """Final parameters plus the per-outer-iteration trace."""

    final_params: NetworkParams
    final_theta: np.ndarray
    objective: list[float]
    risk: list[float]
    penalty: list[float]
    sparsity: list[float]
    inner_steps: list[int]
    initial_objective: float
    flags: FitFlags = field(default_factory=FitFlags)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.objective)


def sparsity(params, tau: float | None = None):
    """Fraction of exactly nonzero coordinates.

    With ``tau`` given, also returns the fraction of coordinates whose
    magnitude strictly exceeds tau, as a (nonzero, above_tau) pair.
    """
    theta = flatten(params) if isinstance(params, NetworkParams) else np.asarray(params)
    p = theta.size
    nonzero = float(np.count_nonzero(theta)) / p
    if tau is None:
        return nonzero
    above = float(np.count_nonzero(np.abs(theta) > tau)) / p
    return nonzero, above


def prox_step(theta_tk, grad, h, eta: float, cfg: PenaltyConfig) -> np.ndarray:
    """Soft-thresholded gradient step on the surrogate.

    Per coordinate: u_j = theta_j - eta * (grad_j - (lam/tau) h_j), then
    u_j shrinks toward zero by eta*lam/tau and is zeroed when it lands
    within that threshold of the origin.
    """
    theta_tk = np.ascontiguousarray(theta_tk, dtype=np.float64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    if not (theta_tk.shape == grad.shape == h.shape):
        raise ValueError("theta, grad and h must have equal length")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return _kernels.prox_step_raw(theta_tk, grad, h, eta, cfg.lam / cfg.tau)


def _as_xy(data):
    if hasattr(data, "inputs") and hasattr(data, "targets"):
        X, y = data.inputs, data.targets
    else:
        X, y = data
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("data must contain at least one sample")
    if y.shape != (X.shape[0],):
        raise ValueError("targets must be a vector matching the inputs")
    return X, y


def _surrogate_value(risk: float, theta: np.ndarray, h: np.ndarray,
                     n_active: float, cfg: PenaltyConfig) -> float:
    # Overflow to inf is fine here: a diverging candidate simply fails the
    # acceptance test and is rejected.
    ratio = cfg.lam / cfg.tau
    with np.errstate(over="ignore"):
        return (
            risk
            - ratio * float(h @ theta)
            + cfg.lam * n_active
            + ratio * float(np.sum(np.abs(theta)))
        )


def _run_inner(theta_t, h, q_ref, eta, spec, loss, X, y, pen, opt, rng):
    """One pass of the inner loop at a fixed tangent vector and learning rate.

    Returns (theta, k_star, accepted, full_batch_risk_at_theta).
    """
    dims = spec.dims
    act = spec.activation
    ratio = pen.lam / pen.tau
    n_active = float(np.count_nonzero(h))
    n = X.shape[0]
    use_batches = opt.batch_size is not None and opt.batch_size < n

    theta_k = theta_t
    risk_next = np.inf
    for k in range(opt.max_inner_steps + 1):
        if use_batches:
            idx = rng.permutation(n)[:opt.batch_size]
            Xb = np.ascontiguousarray(X[idx])
            yb = np.ascontiguousarray(y[idx])
        else:
            Xb, yb = X, y
        _, g = _kernels.risk_grad(theta_k, dims, Xb, yb, act.code, act.param, loss.code)
        theta_next = _kernels.prox_step_raw(theta_k, g, h, eta, ratio)
        risk_next = _kernels.risk_value(theta_next, dims, X, y, act.code, act.param, loss.code)
        if not np.isfinite(risk_next) and not np.all(np.isfinite(theta_next)):
            raise DivergenceError("iterate became non-finite during the inner loop", k, [])
        q_star = _surrogate_value(risk_next, theta_next, h, n_active, pen)
        if q_star <= q_ref:
            return theta_next, k, True, risk_next
        theta_k = theta_next
    return theta_k, opt.max_inner_steps, False, risk_next


def inner_loop(theta_t, spec: MlpSpec, loss: LossKind, data, cfg: PenaltyConfig,
               opt: OptimizerConfig):
    """Run the proximal inner loop once from ``theta_t`` with full batches.

    The tangent vector is computed from ``theta_t`` and held fixed.  Stops
    at the first step whose surrogate value does not exceed the surrogate
    at ``theta_t`` or after ``max_inner_steps`` additional steps; returns
    the final iterate and the stopping index.
    """
    X, y = _as_xy(data)
    loss.check_targets(y)
    theta_t = np.ascontiguousarray(theta_t, dtype=np.float64)
    act = spec.activation
    h = active_signs(theta_t, cfg.tau)
    risk_t = _kernels.risk_value(theta_t, spec.dims, X, y, act.code, act.param, loss.code)
    q_ref = _surrogate_value(risk_t, theta_t, h, float(np.count_nonzero(h)), cfg)
    theta_next, k_star, _, _ = _run_inner(
        theta_t, h, q_ref, opt.learning_rate, spec, loss, X, y, cfg, opt,
        np.random.default_rng(opt.seed),
    )
    return theta_next, k_star


def fit(data, spec: MlpSpec, loss: LossKind, penalty_cfg: PenaltyConfig,
        opt_cfg: OptimizerConfig, init: NetworkParams | None = None,
        trace_sink=None) -> FitReport:
    """Minimize risk plus the clipped penalty; returns params and trace.

    Deterministic for a fixed config and seed.  ``trace_sink``, when given,
    receives one comma-separated line per outer iteration with fields
    iteration, objective, risk, penalty, sparsity.
    """
    X, y = _as_xy(data)
    loss.check_targets(y)
    act = spec.activation
    dims = spec.dims

    if init is not None:
        validate_params(init, spec)
        theta = flatten(init)
    else:
        theta = flatten(init_params(spec, opt_cfg.seed))
    p = theta.size

    rng = np.random.default_rng([opt_cfg.seed, 1])
    halvings_total = 0
    eta_next = opt_cfg.learning_rate

    risk_cur = _kernels.risk_value(theta, dims, X, y, act.code, act.param, loss.code)
    q_cur = risk_cur + penalty_cfg.lam * clipped_norm(theta, penalty_cfg.tau)
    initial_objective = q_cur

    report = FitReport(
        final_params=None, final_theta=None,
        objective=[], risk=[], penalty=[], sparsity=[], inner_steps=[],
        initial_objective=initial_objective,
    )
    strict = opt_cfg.monotone_policy == "strict"
    full_batch = opt_cfg.batch_size is None or opt_cfg.batch_size >= X.shape[0]
    flat_count = 0

    for t in range(opt_cfg.outer_iters):
        h = active_signs(theta, penalty_cfg.tau)
        stalled_now = False
        eta = eta_next
        try:
            # In strict mode a rejected or diverging inner attempt halves the
            # learning rate and retries.  After an accepted step the rate is
            # allowed to double back toward the configured one, so a single
            # rough patch does not slow the whole remaining run.
            if strict:
                ok = False
                k_star = opt_cfg.max_inner_steps
                theta_new, risk_new = theta, risk_cur
                for attempt in range(_MAX_HALVINGS + 1):
                    if attempt > 0:
                        eta *= 0.5
                        halvings_total += 1
                    try:
                        theta_new, k_star, ok, risk_new = _run_inner(
                            theta, h, q_cur, eta, spec, loss, X, y, penalty_cfg, opt_cfg, rng)
                    except DivergenceError:
                        continue
                    if ok:
                        break
                if ok:
                    eta_next = min(opt_cfg.learning_rate, 2.0 * eta)
                else:
                    theta_new, risk_new = theta, risk_cur
                    stalled_now = True
            else:
                theta_new, k_star, ok, risk_new = _run_inner(
                    theta, h, q_cur, eta, spec, loss, X, y, penalty_cfg, opt_cfg, rng)
        except DivergenceError as err:
            raise DivergenceError(str(err), t, list(report.objective)) from None

        pen_new = penalty_cfg.lam * clipped_norm(theta_new, penalty_cfg.tau)
        q_new = risk_new + pen_new
        if not np.isfinite(q_new):
            raise DivergenceError("objective became non-finite", t, report.objective)

        sp = float(np.count_nonzero(theta_new)) / p
        report.objective.append(q_new)
        report.risk.append(risk_new)
        report.penalty.append(pen_new)
        report.sparsity.append(sp)
        report.inner_steps.append(k_star)
        if trace_sink is not None:
            trace_sink(f"{t},{q_new!r},{risk_new!r},{pen_new!r},{sp!r}")

        improvement = (q_cur - q_new) / max(1.0, abs(q_cur))
        theta, risk_cur, q_cur = theta_new, risk_new, q_new

        if stalled_now:
            report.flags.stalled = True
            if full_batch:
                # Nothing can change on retry: same anchor, same gradients.
                break
        if opt_cfg.early_stop_patience is not None:
            flat_count = flat_count + 1 if improvement < opt_cfg.early_stop_rel_tol else 0
            if flat_count >= opt_cfg.early_stop_patience:
                report.flags.early_stopped = True
                break
    else:
        report.flags.completed_all_iters = True

    report.final_theta = theta
    report.final_params = unflatten(spec, theta)
    report.diagnostics = {
        "max_abs_param": float(np.max(np.abs(theta))),
        "final_learning_rate": eta,
        "learning_rate_halvings": halvings_total,
        "backend": _kernels.BACKEND,
    }
    return report


def adam_fit(data, spec: MlpSpec, loss: LossKind, opt_cfg: OptimizerConfig,
             init: NetworkParams | None = None, trace_sink=None) -> FitReport:
    """Adam on the bare empirical risk; the non-sparse baseline.

    ``outer_iters`` is the total step count here.  The recorded risk is the
    one evaluated during the gradient computation, i.e. at the pre-step
    iterate (on the mini-batch when mini-batching).
    """
    X, y = _as_xy(data)
    loss.check_targets(y)
    act = spec.activation
    dims = spec.dims

    if init is not None:
        validate_params(init, spec)
        theta = flatten(init)
    else:
        theta = flatten(init_params(spec, opt_cfg.seed))
    p = theta.size

    rng = np.random.default_rng([opt_cfg.seed, 1])
    n = X.shape[0]
    use_batches = opt_cfg.batch_size is not None and opt_cfg.batch_size < n
    b1, b2, eps = opt_cfg.adam_beta1, opt_cfg.adam_beta2, opt_cfg.adam_eps
    lr = opt_cfg.learning_rate

    m = np.zeros(p)
    v = np.zeros(p)
    report = FitReport(
        final_params=None, final_theta=None,
        objective=[], risk=[], penalty=[], sparsity=[], inner_steps=[],
        initial_objective=_kernels.risk_value(theta, dims, X, y, act.code, act.param, loss.code),
    )

    for t in range(1, opt_cfg.outer_iters + 1):
        if use_batches:
            idx = rng.permutation(n)[:opt_cfg.batch_size]
            Xb = np.ascontiguousarray(X[idx])
            yb = np.ascontiguousarray(y[idx])
        else:
            Xb, yb = X, y
        risk_b, g = _kernels.risk_grad(theta, dims, Xb, yb, act.code, act.param, loss.code)
        if not np.isfinite(risk_b) or not np.all(np.isfinite(g)):
            raise DivergenceError("risk or gradient became non-finite", t - 1, report.objective)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)

        sp = float(np.count_nonzero(theta)) / p
        report.objective.append(risk_b)
        report.risk.append(risk_b)
        report.penalty.append(0.0)
        report.sparsity.append(sp)
        report.inner_steps.append(1)
        if trace_sink is not None:
            trace_sink(f"{t - 1},{risk_b!r},{risk_b!r},0.0,{sp!r}")

    report.flags.completed_all_iters = True
    report.final_theta = theta
    report.final_params = unflatten(spec, theta)
    report.diagnostics = {
        "max_abs_param": float(np.max(np.abs(theta))),
        "final_learning_rate": lr,
        "backend": _kernels.BACKEND,
    }
    return report
