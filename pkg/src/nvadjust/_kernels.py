"""Compiled inner loops for the forecasters."""

import numpy as np
from numba import njit


@njit(cache=True)
def css_residuals(y, mu, phi, theta):
    """Conditional residuals of an ARMA model, zero pre-sample innovations.

    Residuals start at index ``len(phi)``; earlier observations only seed the
    AR part.
    """
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    e = np.zeros(n)
    for t in range(p, n):
        acc = y[t] - mu
        for i in range(p):
            acc -= phi[i] * (y[t - 1 - i] - mu)
        for j in range(q):
            if t - 1 - j >= p:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
    return e[p:]


@njit(cache=True)
def css_ssr(y, mu, phi, theta):
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    e = np.zeros(n)
    ssr = 0.0
    for t in range(p, n):
        acc = y[t] - mu
        for i in range(p):
            acc -= phi[i] * (y[t - 1 - i] - mu)
        for j in range(q):
            if t - 1 - j >= p:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
        ssr += acc * acc
    return ssr


@njit(cache=True)
def holt_filter(y, alpha, beta, l0, b0):
    """One-step errors and final (level, trend) of additive-trend smoothing.

    ``beta = 0`` and ``b0 = 0`` gives simple exponential smoothing.
    """
    n = y.shape[0]
    err = np.empty(n)
    level = l0
    trend = b0
    for t in range(n):
        pred = level + trend
        err[t] = y[t] - pred
        new_level = pred + alpha * err[t]
        trend = trend + beta * (new_level - level - trend)
        level = new_level
    return err, level, trend


@njit(cache=True)
def holt_profile(y, alpha, beta, with_trend):
    """Least-squares initial states for fixed smoothing weights.

    The one-step errors are affine in (l0, b0), so the optimal initial
    states solve a small linear least-squares problem. Returns
    ``(sse, l0, b0)``.
    """
    e0, _, _ = holt_filter(y, alpha, beta, 0.0, 0.0)
    zero = np.zeros_like(y)
    el, _, _ = holt_filter(zero, alpha, beta, 1.0, 0.0)
    # errors = e0 + l0*el (+ b0*eb)
    if not with_trend:
        sll = np.dot(el, el)
        l0 = -np.dot(e0, el) / sll if sll > 0 else 0.0
        r = e0 + l0 * el
        return np.dot(r, r), l0, 0.0
    eb, _, _ = holt_filter(zero, alpha, beta, 0.0, 1.0)
    a11 = np.dot(el, el)
    a12 = np.dot(el, eb)
    a22 = np.dot(eb, eb)
    r1 = -np.dot(e0, el)
    r2 = -np.dot(e0, eb)
    det = a11 * a22 - a12 * a12
    if abs(det) <= 1e-12 * (a11 * a22 + 1e-300):
        l0 = r1 / a11 if a11 > 0 else 0.0
        b0 = 0.0
    else:
        l0 = (r1 * a22 - r2 * a12) / det
        b0 = (a11 * r2 - a12 * r1) / det
    r = e0 + l0 * el + b0 * eb
    return np.dot(r, r), l0, b0


@njit(cache=True)
def pacf_to_coefs(r):
    """Durbin-Levinson map from partial autocorrelations to AR coefficients."""
    k = r.shape[0]
    phi = np.zeros(k)
    tmp = np.zeros(k)
    for m in range(k):
        for j in range(m):
            tmp[j] = phi[j] - r[m] * phi[m - 1 - j]
        for j in range(m):
            phi[j] = tmp[j]
        phi[m] = r[m]
    return phi


@njit(cache=True)
def css_ssr_raw(y, raw, p, q):
    """CSS objective on the unconstrained scale ``[mean, atanh(pacf_ar), atanh(pacf_ma)]``."""
    phi = pacf_to_coefs(np.tanh(raw[1:1 + p]))
    theta = -pacf_to_coefs(np.tanh(raw[1 + p:1 + p + q]))
    return css_ssr(y, raw[0], phi, theta)


@njit(cache=True)
def adjust_path(x_prime, d, x0, beta):
    """Demand-chasing recursion ``x_t = x'_t + beta (d_{t-1} - x_{t-1})``.

    ``d`` holds the demands ``d_{t-1}`` aligned with ``x_prime``; ``x0`` is
    the order preceding the first period. Negative orders are clamped to 0.
    """
    n = x_prime.shape[0]
    x = np.empty(n)
    clamped = np.zeros(n, dtype=np.bool_)
    prev = x0
    for i in range(n):
        v = x_prime[i] + beta * (d[i] - prev)
        if v < 0.0:
            v = 0.0
            clamped[i] = True
        x[i] = v
        prev = v
    return x, clamped
