"""Compiled inner loops for the location and scale estimators.

The fits call these once per data set; at desk-scale n the interpreter
overhead of an equivalent numpy loop dominates the arithmetic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "weiszfeld",
    "lts_steps",
    "median_and_mad",
    "distance_summary",
    "column_mad",
    "column_median",
    "row_norms",
    "radial_weights",
]


@njit(cache=True, error_model="numpy")
def row_norms(X, m):
    n, p = X.shape
    d = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(p):
            t = X[i, j] - m[j]
            s += t * t
        d[i] = np.sqrt(s)
    return d


@njit(cache=True, error_model="numpy")
def weiszfeld(X, m0, tol, max_iter):
    """Modified Weiszfeld iteration; returns (center, iterations, converged)."""
    n, p = X.shape
    m = m0.copy()
    num = np.empty(p)
    for it in range(1, max_iter + 1):
        sw = 0.0
        eta = 0
        num[:] = 0.0
        for i in range(n):
            s = 0.0
            for j in range(p):
                t = X[i, j] - m[j]
                s += t * t
            if s == 0.0:
                eta += 1
                continue
            w = 1.0 / np.sqrt(s)
            sw += w
            for j in range(p):
                num[j] += w * X[i, j]
        if eta == n:
            return m, it, True
        if eta == 0:
            scale = n / sw
            step2 = 0.0
            for j in range(p):
                v = num[j] / sw
                step2 += (v - m[j]) ** 2
                m[j] = v
        else:
            # pull of the non-coincident points, sum_i w_i (x_i - m)
            pull = np.zeros(p)
            for i in range(n):
                s = 0.0
                for j in range(p):
                    t = X[i, j] - m[j]
                    s += t * t
                if s > 0.0:
                    w = 1.0 / np.sqrt(s)
                    for j in range(p):
                        pull[j] += w * (X[i, j] - m[j])
            r = 0.0
            for j in range(p):
                r += pull[j] * pull[j]
            r = np.sqrt(r)
            if r <= eta:
                # subgradient condition holds at the data point
                return m, it, True
            frac = eta / r
            scale = (n - eta) / sw
            step2 = 0.0
            for j in range(p):
                v = (1.0 - frac) * num[j] / sw + frac * m[j]
                step2 += (v - m[j]) ** 2
                m[j] = v
        if np.sqrt(step2) <= tol * scale:
            return m, it, True
    return m, max_iter, False


@njit(cache=True, error_model="numpy")
def lts_steps(X, m0, k):
    """k trimming steps: mean of the (n + 1) // 2 rows closest to the center."""
    n, p = X.shape
    h = (n + 1) // 2
    m = m0.copy()
    d2 = np.empty(n)
    for _ in range(k):
        for i in range(n):
            s = 0.0
            for j in range(p):
                t = X[i, j] - m[j]
                s += t * t
            d2[i] = s
        # h-th smallest squared distance; ties at it are taken in row order
        kth = np.partition(d2, h - 1)[h - 1]
        acc = np.zeros(p)
        taken = 0
        for i in range(n):
            if d2[i] < kth:
                taken += 1
                for j in range(p):
                    acc[j] += X[i, j]
        for i in range(n):
            if taken == h:
                break
            if d2[i] == kth:
                taken += 1
                for j in range(p):
                    acc[j] += X[i, j]
        for j in range(p):
            m[j] = acc[j] / h
    return m


@njit(cache=True, error_model="numpy")
def median_and_mad(u):
    """Median and raw (unscaled) median absolute deviation of a 1-d array."""
    med = np.median(u)
    return med, np.median(np.abs(u - med))


@njit(cache=True, error_model="numpy")
def distance_summary(d):
    """med(d), med(u) and raw MAD(u) with u = d ** (2/3)."""
    c = np.cbrt(d)
    u = c * c
    med_u, mad_u = median_and_mad(u)
    return np.median(d), med_u, mad_u


@njit(cache=True, error_model="numpy")
def column_mad(A):
    """Raw MAD of each column of a 2-d array."""
    n, k = A.shape
    out = np.empty(k)
    col = np.empty(n)
    for j in range(k):
        for i in range(n):
            col[i] = A[i, j]
        med = np.median(col)
        for i in range(n):
            col[i] = abs(col[i] - med)
        out[j] = np.median(col)
    return out


@njit(cache=True, error_model="numpy")
def column_median(A):
    n, k = A.shape
    out = np.empty(k)
    col = np.empty(n)
    for j in range(k):
        for i in range(n):
            col[i] = A[i, j]
        out[j] = np.median(col)
    return out


# radial function codes used by radial_weights
IDENTITY, SSCM, WINSOR, QUAD, BALL, SHELL, LR = range(7)

# For odd n the shell limits reproduce a sample distance up to rounding;
# the relative slack keeps that point inside under rotations of the data.
SHELL_RTOL = 1e-12


@njit(cache=True, error_model="numpy")
def radial_weights(code, r, q1, q2, q3, q3star):
    out = np.empty(r.size)
    for i in range(r.size):
        x = r[i]
        if code == IDENTITY:
            v = 1.0
        elif code == SSCM:
            v = 1.0 / x if x > 0.0 else 0.0
        elif code == BALL:
            v = 1.0 if x <= q2 else 0.0
        elif code == SHELL:
            v = 1.0 if q1 * (1.0 - SHELL_RTOL) <= x <= q3 * (1.0 + SHELL_RTOL) else 0.0
        elif x <= q2:
            v = 1.0
        elif code == WINSOR:
            v = q2 / x
        elif code == QUAD:
            v = (q2 * q2) / (x * x)
        elif x <= q3star and q3star > q2:
            v = (q3star - x) / (q3star - q2)
        else:
            v = 0.0
        out[i] = v
    return out
