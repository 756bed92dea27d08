# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled n-fold convolution recursion for lattice laws with positive mass at 0."""

import numpy as np

from libc.math cimport exp, log, fabs

NAME = "cython"

cdef double TINY = 1e-300
cdef double RESCALE_AT = 1e280


def binomial_recursion(const double[::1] q, long long n, double trunc_eps):
    """Masses of the n-fold convolution of ``q`` (``q[0] > 0``).

    Returns ``(f, log_scale, rescaled)`` where the true masses are
    ``f * exp(log_scale)``. The loop stops once the cumulative mass reaches
    ``1 - trunc_eps`` (never early when ``trunc_eps == 0``).
    """
    cdef Py_ssize_t K = q.shape[0] - 1
    cdef Py_ssize_t length = n * K + 1
    nz_np = np.flatnonzero(np.asarray(q)[1:]) + 1
    cdef long long[::1] idx = nz_np.astype(np.int64)
    cdef double[::1] val = np.ascontiguousarray(np.asarray(q)[nz_np])
    cdef Py_ssize_t nnz = idx.shape[0]
    out = np.zeros(length, dtype=np.float64)
    cdef double[::1] f = out

    cdef double q0 = q[0]
    cdef double lf0 = n * log(q0)
    cdef double log_scale = 0.0
    cdef bint rescaled = False
    cdef double target = 1.0 - trunc_eps
    cdef long long np1 = n + 1
    cdef Py_ssize_t j, i, m = 0, last = 0, r
    cdef long long l
    cdef double s, c, t, v, tot, cum, cumc

    with nogil:
        if lf0 >= log(TINY):
            f[0] = exp(lf0)
        else:
            f[0] = 1.0
            log_scale = lf0
            rescaled = True
        cum = f[0]
        cumc = 0.0
        for j in range(1, length):
            while m < nnz and idx[m] <= j:
                m += 1
            s = 0.0
            c = 0.0
            for i in range(m):
                l = idx[i]
                t = <double>(np1 * l - j) * val[i] * f[j - l]
                tot = s + t
                if fabs(s) >= fabs(t):
                    c += (s - tot) + t
                else:
                    c += (t - tot) + s
                s = tot
            v = (s + c) / (<double>j * q0)
            f[j] = v
            tot = cum + v
            if fabs(cum) >= fabs(v):
                cumc += (cum - tot) + v
            else:
                cumc += (v - tot) + cum
            cum = tot
            last = j
            if rescaled and fabs(v) > RESCALE_AT:
                for r in range(j + 1):
                    f[r] = f[r] / RESCALE_AT
                cum = cum / RESCALE_AT
                cumc = cumc / RESCALE_AT
                log_scale += log(RESCALE_AT)
            if trunc_eps > 0.0 and (cum + cumc) * exp(log_scale) >= target:
                break

    return out[: last + 1].copy(), log_scale, bool(rescaled)
