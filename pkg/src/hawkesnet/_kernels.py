"""Compiled inner loops for likelihood evaluation.

These mirror the vectorised numpy definitions in ``kernel`` and ``markmodel``
and are checked against them in the test suite.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def excitation_sums(t, beta):
    n = t.size
    a = np.zeros(n)
    for i in range(1, n):
        a[i] = math.exp(-beta * (t[i] - t[i - 1])) * (1.0 + a[i - 1])
    return a


@njit(cache=True)
def _log1m_exp(lp):
    if lp > -0.6931471805599453:
        return math.log(-math.expm1(lp))
    return math.log1p(-math.exp(lp))


@njit(cache=True)
def ba_loglik(x, dt, e, starts, sizes, tau):
    """Bernoulli log-likelihood of preferential-attachment segments.

    Returns (value, number of observed edges with zero probability).
    """
    total = 0.0
    zero = 0
    for s in range(starts.size):
        a = starts[s]
        b = a + sizes[s]
        mx = -np.inf
        for i in range(a, b):
            lw = x[i] - tau * dt[i]
            if lw > mx:
                mx = lw
        if mx == -np.inf:
            lp = -math.log(sizes[s])
            for i in range(a, b):
                total += lp if e[i] else _log1m_exp(lp)
            continue
        acc = 0.0
        for i in range(a, b):
            acc += math.exp(x[i] - tau * dt[i] - mx)
        lse = mx + math.log(acc)
        for i in range(a, b):
            lp = x[i] - tau * dt[i] - lse
            if e[i]:
                if lp == -np.inf:
                    zero += 1
                else:
                    total += lp
            else:
                total += _log1m_exp(lp)
    if zero:
        return -np.inf, zero
    return total, zero


_FAST = {"nsz", "arcp", "contract", "afn", "reassoc"}


@njit(cache=True, fastmath=_FAST)
def cs_loglik(X, dt, e, theta, tau, nu, cap):
    """Bernoulli log-likelihood with p = min((nu + e^{-tau dt}) logistic(X theta), e^cap).

    Returns (value, clamp count).
    """
    total = 0.0
    clamped = 0
    p = theta.size
    pcap = math.exp(cap)
    for i in range(dt.size):
        z = 0.0
        for k in range(p):
            z += X[i, k] * theta[k]
        w = nu + math.exp(-tau * dt[i])
        if e[i]:
            if z >= 0:
                ls = -math.log1p(math.exp(-z))
            else:
                ls = z - math.log1p(math.exp(z))
            dec = -tau * dt[i]
            if nu > 0:
                lognu = math.log(nu)
                hi = max(dec, lognu)
                dec = hi + math.log1p(math.exp(-abs(dec - lognu)))
            lp = dec + ls
            if lp > cap:
                lp = cap
                clamped += 1
            total += lp
        else:
            q = w / (1.0 + math.exp(-z))
            if q > pcap:
                q = pcap
                clamped += 1
            total += math.log1p(-q)
    return total, clamped


@njit(cache=True, fastmath=_FAST)
def cs_loglik_packed(ux, udt, xi, di, ei, cnt, theta, tau, nu, cap):
    """``cs_loglik`` over deduplicated rows.

    Row r stands for ``cnt[r]`` identical candidates with features
    ``ux[xi[r]]``, elapsed time ``udt[di[r]]`` and outcome ``ei[r]``.
    """
    nx, p = ux.shape
    logsig = np.empty(nx)
    sig = np.empty(nx)
    for j in range(nx):
        z = 0.0
        for k in range(p):
            z += ux[j, k] * theta[k]
        if z >= 0:
            ez = math.exp(-z)
            logsig[j] = -math.log1p(ez)
            sig[j] = 1.0 / (1.0 + ez)
        else:
            ez = math.exp(z)
            logsig[j] = z - math.log1p(ez)
            sig[j] = ez / (1.0 + ez)
    nd = udt.size
    w = np.empty(nd)
    logw = np.empty(nd)
    lognu = math.log(nu) if nu > 0 else 0.0
    for j in range(nd):
        dec = -tau * udt[j]
        w[j] = nu + math.exp(dec)
        if nu > 0:
            hi = max(dec, lognu)
            dec = hi + math.log1p(math.exp(-abs(dec - lognu)))
        logw[j] = dec
    total = 0.0
    clamped = 0
    pcap = math.exp(cap)
    for r in range(xi.size):
        c = cnt[r]
        if ei[r]:
            lp = logw[di[r]] + logsig[xi[r]]
            if lp > cap:
                lp = cap
                clamped += c
            total += c * lp
        else:
            q = w[di[r]] * sig[xi[r]]
            if q > pcap:
                q = pcap
                clamped += c
            total += c * math.log1p(-q)
    return total, clamped
