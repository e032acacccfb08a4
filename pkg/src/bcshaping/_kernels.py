"""Fused quadrature loops over (symbol, node, component); compiled with numba."""

import numpy as np
from numba import njit

TINY = 1e-300


@njit(cache=True, fastmath=True, error_model="numpy")
def mixture_sums(p, x, sigma, t, w):
    """logA_w[i, j] = sum_n w_n log A_i(y_jn) and logB_w[j] = sum_n w_n log B(y_jn)."""
    k_size, m = p.shape
    q = p.sum(axis=0)
    log_a = np.zeros((k_size, m))
    log_b = np.zeros(m)
    g = np.empty(m)
    a = np.empty(k_size)
    for j in range(m):
        for n in range(t.size):
            y = x[j] + sigma * t[n]
            b = 0.0
            for i in range(k_size):
                a[i] = 0.0
            for k in range(m):
                d = (y - x[k]) / sigma
                g[k] = np.exp(-0.5 * d * d)
                b += q[k] * g[k]
                for i in range(k_size):
                    a[i] += p[i, k] * g[k]
            log_b[j] += w[n] * np.log(max(b, TINY))
            for i in range(k_size):
                log_a[i, j] += w[n] * np.log(max(a[i], TINY))
    return log_a, log_b


@njit(cache=True, fastmath=True, error_model="numpy")
def mixture_grads(p, x, sigma, t, w):
    """Node sums needed by the p- and x-gradients (see _Terms.gradients)."""
    k_size, m = p.shape
    q = p.sum(axis=0)
    ra = np.zeros((k_size, m))
    sa = np.zeros((k_size, m))
    rb = np.zeros(m)
    sb = np.zeros(m)
    move_a = np.zeros(m)
    move_b = np.zeros(m)
    g = np.empty(m)
    gd = np.empty(m)
    a = np.empty(k_size)
    ga = np.empty(k_size)
    for j in range(m):
        for n in range(t.size):
            y = x[j] + sigma * t[n]
            b = 0.0
            gb = 0.0
            for i in range(k_size):
                a[i] = 0.0
                ga[i] = 0.0
            for k in range(m):
                d = (y - x[k]) / sigma
                g[k] = np.exp(-0.5 * d * d)
                gd[k] = g[k] * d
                b += q[k] * g[k]
                gb += q[k] * gd[k]
                for i in range(k_size):
                    a[i] += p[i, k] * g[k]
                    ga[i] += p[i, k] * gd[k]
            for i in range(k_size):
                if p[i, j] > 0.0:
                    coef = p[i, j] * w[n] / max(a[i], TINY)
                    move_a[j] -= coef * ga[i]
                    for kk in range(m):
                        ra[i, kk] += coef * g[kk]
                        sa[i, kk] += coef * gd[kk]
            if q[j] > 0.0:
                coef = q[j] * w[n] / max(b, TINY)
                move_b[j] -= coef * gb
                for kk in range(m):
                    rb[kk] += coef * g[kk]
                    sb[kk] += coef * gd[kk]
    return ra, sa, rb, sb, move_a, move_b
