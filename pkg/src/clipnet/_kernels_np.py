"""Pure-numpy reference implementations of the hot kernels.

These are the fallback path used when the numba backend is disabled (set
``CLIPNET_BACKEND=numpy``) and the ground truth the compiled twins in
:mod:`clipnet._kernels_nb` are tested against.

Conventions shared by both backends:

* ``theta`` is the flat parameter vector.  Per affine layer the layout is
  the transposed weight matrix in row-major order followed by the bias, so
  slicing ``theta[off:off + din * dout].reshape(din, dout)`` yields the
  matrix that multiplies activations from the left as ``A @ Wt``.
* ``dims`` is the int64 array ``[d, n_1, ..., n_L, 1]`` of layer widths.
* Loss codes: 0 square, 1 logistic, 2 exponential.
"""
from __future__ import annotations

import numpy as np

from .activations import act_deriv, act_value

SQUARE = 0
LOGISTIC = 1
EXPONENTIAL = 2

# exp(_EXP_ARG_CAP) stays below the 1e300 clamp on the exponential loss
EXP_CLAMP = 1e300
_EXP_ARG_CAP = 690.7755278982137


def loss_values(y: np.ndarray, f: np.ndarray, loss_code: int) -> np.ndarray:
    if loss_code == SQUARE:
        r = y - f
        return r * r
    m = y * f
    if loss_code == LOGISTIC:
        return np.log1p(np.exp(-np.abs(m))) + np.maximum(-m, 0.0)
    if loss_code == EXPONENTIAL:
        return np.exp(np.minimum(-m, _EXP_ARG_CAP))
    raise ValueError(f"unknown loss code {loss_code}")


def loss_derivs(y: np.ndarray, f: np.ndarray, loss_code: int) -> np.ndarray:
    """Derivative of the loss with respect to the prediction f."""
    if loss_code == SQUARE:
        return -2.0 * (y - f)
    m = y * f
    if loss_code == LOGISTIC:
        out = np.empty_like(m)
        pos = m >= 0
        e = np.exp(-m[pos])
        out[pos] = e / (1.0 + e)
        out[~pos] = 1.0 / (1.0 + np.exp(m[~pos]))
        return -y * out
    if loss_code == EXPONENTIAL:
        return -y * np.exp(np.minimum(-m, _EXP_ARG_CAP))
    raise ValueError(f"unknown loss code {loss_code}")


def forward_batch(theta, dims, X, act_code, act_param):
    """Network outputs for a batch of inputs, shape (n,)."""
    A = X
    off = 0
    last = len(dims) - 2
    for l in range(len(dims) - 1):
        din = int(dims[l])
        dout = int(dims[l + 1])
        w_end = off + din * dout
        Wt = theta[off:w_end].reshape(din, dout)
        b = theta[w_end:w_end + dout]
        off = w_end + dout
        Z = A @ Wt + b
        A = act_value(act_code, act_param, Z) if l < last else Z
    return A[:, 0]


def risk_value(theta, dims, X, y, act_code, act_param, loss_code):
    f = forward_batch(theta, dims, X, act_code, act_param)
    return float(np.mean(loss_values(y, f, loss_code)))


def risk_grad(theta, dims, X, y, act_code, act_param, loss_code):
    """Mean loss over the batch and its exact gradient in theta."""
    n = X.shape[0]
    nlayers = len(dims) - 1
    A = X
    acts = [X]
    pres = []
    wts = []
    off = 0
    for l in range(nlayers):
        din = int(dims[l])
        dout = int(dims[l + 1])
        w_end = off + din * dout
        Wt = theta[off:w_end].reshape(din, dout)
        b = theta[w_end:w_end + dout]
        off = w_end + dout
        Z = A @ Wt + b
        wts.append(Wt)
        if l < nlayers - 1:
            pres.append(Z)
            A = act_value(act_code, act_param, Z)
            acts.append(A)
        else:
            f = Z[:, 0]
    risk = float(np.mean(loss_values(y, f, loss_code)))

    delta = (loss_derivs(y, f, loss_code) / n)[:, None]
    grad = np.zeros_like(theta)
    off = theta.size
    for l in range(nlayers - 1, -1, -1):
        din = int(dims[l])
        dout = int(dims[l + 1])
        off -= din * dout + dout
        gw = acts[l].T @ delta
        grad[off:off + din * dout] = gw.ravel()
        grad[off + din * dout:off + din * dout + dout] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ wts[l].T) * act_deriv(act_code, act_param, pres[l - 1])
    return risk, grad


def prox_step(theta, grad, h, eta, lam_over_tau):
    """Gradient step on the smooth surrogate part followed by soft thresholding."""
    u = theta - eta * (grad - lam_over_tau * h)
    thr = eta * lam_over_tau
    return np.where(np.abs(u) >= thr, u - np.sign(u) * thr, 0.0)


def knn_query(train_x, train_y, query_x, k, classify):
    """Brute-force k-nearest-neighbour predictions.

    Distances are computed exactly per pair (no inner-product expansion) so
    tie-breaking by training index matches the compiled twin: rows at equal
    distance are ranked by a stable sort on the distance array.
    """
    n_query = query_x.shape[0]
    preds = np.empty(n_query, dtype=np.float64)
    chunk = 512
    for start in range(0, n_query, chunk):
        stop = min(start + chunk, n_query)
        diff = query_x[start:stop, None, :] - train_x[None, :, :]
        d2 = np.einsum("qmd,qmd->qm", diff, diff)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        means = train_y[order].mean(axis=1)
        if classify:
            preds[start:stop] = np.where(means >= 0, 1.0, -1.0)
        else:
            preds[start:stop] = means
    return preds
