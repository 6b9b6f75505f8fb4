"""Numba-compiled twins of the kernels in :mod:`clipnet._kernels_np`.

Compiled with ``cache=True`` so the warm-up cost is paid once per machine,
and ``nogil=True`` so experiment replicates can run in threads.  Activation
and loss dispatch codes are shared with the reference module; see there for
the flat parameter layout.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_EXP_ARG_CAP = 690.7755278982137


@njit(cache=True, nogil=True)
def _sigmoid_s(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _act(Z, code, a):
    out = np.empty_like(Z)
    n, m = Z.shape
    for i in range(n):
        for j in range(m):
            z = Z[i, j]
            if code == 0:    # relu
                v = z if z > 0.0 else 0.0
            elif code == 1:  # leaky relu
                v = z if z > 0.0 else a * z
            elif code == 2:  # sigmoid
                v = _sigmoid_s(z)
            elif code == 3:  # tanh
                v = np.tanh(z)
            elif code == 4:  # softplus
                v = np.log1p(np.exp(-abs(z))) + (z if z > 0.0 else 0.0)
            elif code == 5:  # swish
                v = z * _sigmoid_s(z)
            elif code == 6:  # elu
                v = z if z > 0.0 else a * (np.exp(z) - 1.0)
            elif code == 7:  # softsign
                v = z / (1.0 + abs(z))
            elif code == 8:  # isru
                v = z / np.sqrt(1.0 + a * z * z)
            else:            # isrlu
                v = z if z > 0.0 else z / np.sqrt(1.0 + a * z * z)
            out[i, j] = v
    return out


@njit(cache=True, nogil=True)
def _act_deriv(Z, code, a):
    out = np.empty_like(Z)
    n, m = Z.shape
    for i in range(n):
        for j in range(m):
            z = Z[i, j]
            if code == 0:
                v = 1.0 if z > 0.0 else 0.0
            elif code == 1:
                v = 1.0 if z > 0.0 else a
            elif code == 2:
                s = _sigmoid_s(z)
                v = s * (1.0 - s)
            elif code == 3:
                t = np.tanh(z)
                v = 1.0 - t * t
            elif code == 4:
                v = _sigmoid_s(z)
            elif code == 5:
                s = _sigmoid_s(z)
                v = s * (1.0 + z * (1.0 - s))
            elif code == 6:
                v = 1.0 if z > 0.0 else a * np.exp(z)
            elif code == 7:
                v = 1.0 / (1.0 + abs(z)) ** 2
            elif code == 8:
                v = (1.0 + a * z * z) ** -1.5
            else:
                v = 1.0 if z > 0.0 else (1.0 + a * z * z) ** -1.5
            out[i, j] = v
    return out


@njit(cache=True, nogil=True)
def _loss_value_s(y, f, loss_code):
    if loss_code == 0:
        r = y - f
        return r * r
    m = y * f
    if loss_code == 1:
        return np.log1p(np.exp(-abs(m))) + (-m if m < 0.0 else 0.0)
    arg = -m
    if arg > _EXP_ARG_CAP:
        arg = _EXP_ARG_CAP
    return np.exp(arg)


@njit(cache=True, nogil=True)
def _loss_deriv_s(y, f, loss_code):
    if loss_code == 0:
        return -2.0 * (y - f)
    m = y * f
    if loss_code == 1:
        if m >= 0.0:
            e = np.exp(-m)
            return -y * e / (1.0 + e)
        return -y / (1.0 + np.exp(m))
    arg = -m
    if arg > _EXP_ARG_CAP:
        arg = _EXP_ARG_CAP
    return -y * np.exp(arg)


@njit(cache=True, nogil=True)
def forward_batch(theta, dims, X, act_code, act_param):
    nlayers = dims.shape[0] - 1
    A = np.ascontiguousarray(X)
    off = 0
    for l in range(nlayers):
        din = dims[l]
        dout = dims[l + 1]
        Wt = theta[off:off + din * dout].reshape(din, dout)
        off += din * dout
        b = theta[off:off + dout]
        off += dout
        Z = np.dot(A, Wt)
        Z += b
        if l < nlayers - 1:
            A = _act(Z, act_code, act_param)
        else:
            A = Z
    return A[:, 0].copy()


@njit(cache=True, nogil=True)
def risk_value(theta, dims, X, y, act_code, act_param, loss_code):
    f = forward_batch(theta, dims, X, act_code, act_param)
    n = f.shape[0]
    total = 0.0
    for i in range(n):
        total += _loss_value_s(y[i], f[i], loss_code)
    return total / n


@njit(cache=True, nogil=True)
def risk_grad(theta, dims, X, y, act_code, act_param, loss_code):
    n = X.shape[0]
    nlayers = dims.shape[0] - 1

    A = np.ascontiguousarray(X)
    acts = [A]
    pres = []
    wts = []
    off = 0
    for l in range(nlayers):
        din = dims[l]
        dout = dims[l + 1]
        Wt = theta[off:off + din * dout].reshape(din, dout)
        off += din * dout
        b = theta[off:off + dout]
        off += dout
        Z = np.dot(A, Wt)
        Z += b
        wts.append(Wt)
        if l < nlayers - 1:
            pres.append(Z)
            A = _act(Z, act_code, act_param)
            acts.append(A)

    f = Z[:, 0]
    total = 0.0
    delta = np.empty((n, 1))
    for i in range(n):
        total += _loss_value_s(y[i], f[i], loss_code)
        delta[i, 0] = _loss_deriv_s(y[i], f[i], loss_code) / n
    risk = total / n

    grad = np.zeros_like(theta)
    off = theta.shape[0]
    for l in range(nlayers - 1, -1, -1):
        din = dims[l]
        dout = dims[l + 1]
        off -= din * dout + dout
        gw = np.dot(np.ascontiguousarray(acts[l].T), delta)
        grad[off:off + din * dout] = gw.ravel()
        for j in range(dout):
            s = 0.0
            for i in range(n):
                s += delta[i, j]
            grad[off + din * dout + j] = s
        if l > 0:
            back = np.dot(delta, np.ascontiguousarray(wts[l].T))
            delta = back * _act_deriv(pres[l - 1], act_code, act_param)
    return risk, grad


@njit(cache=True, nogil=True)
def prox_step(theta, grad, h, eta, lam_over_tau):
    p = theta.shape[0]
    thr = eta * lam_over_tau
    out = np.empty_like(theta)
    for j in range(p):
        u = theta[j] - eta * (grad[j] - lam_over_tau * h[j])
        if u >= thr:
            out[j] = u - thr
        elif u <= -thr:
            out[j] = u + thr
        else:
            out[j] = 0.0
    return out


@njit(cache=True, nogil=True)
def knn_query(train_x, train_y, query_x, k, classify):
    n_train = train_x.shape[0]
    d = train_x.shape[1]
    n_query = query_x.shape[0]
    preds = np.empty(n_query)
    d2 = np.empty(n_train)
    for q in range(n_query):
        for i in range(n_train):
            s = 0.0
            for j in range(d):
                diff = query_x[q, j] - train_x[i, j]
                s += diff * diff
            d2[i] = s
        order = np.argsort(d2, kind="mergesort")
        mean = 0.0
        for r in range(k):
            mean += train_y[order[r]]
        mean /= k
        if classify:
            preds[q] = 1.0 if mean >= 0.0 else -1.0
        else:
            preds[q] = mean
    return preds
