# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled quadrature kernels; see ``_pykernels`` for the reference version."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sinh, fabs

cnp.import_array()

cdef double LOG_TINY = -690.7755278982137  # log(1e-300)
cdef double SMALL_EPS = 1e-6
cdef double SMALL_ARG = 1e-3


cdef inline double _abr(double a, double b, double t, double logw) nogil:
    # w (e^{at} - e^{bt}) / (a - b), factoring out the larger exponential so
    # expm1 sees a non-positive argument: no cancellation, no inf * 0
    cdef double d = (a - b) * t
    if d >= 0.0:
        return -exp(logw + a * t) * expm1(-d) / (a - b)
    return exp(logw + b * t) * expm1(d) / (a - b)


cdef inline double _g(int kind, double p0, double p1, double t) nogil:
    cdef double x
    if kind == 0:
        return t
    if kind == 1:
        x = p0 * t
        if fabs(p0) < SMALL_EPS and fabs(x) < SMALL_ARG:
            return t * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
        return expm1(x) / p0
    if kind == 2:
        x = p0 * t
        if fabs(p0) < SMALL_EPS and fabs(x) < SMALL_ARG:
            x = x * x
            return t * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0)
        return sinh(x) / p0
    return _abr(p0, p1, t, 0.0)


def group_eval(int kind, double p0, double p1, t):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef Py_ssize_t n = tt.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _g(kind, p0, p1, tt[i])
    return out.reshape(np.shape(t))


def weighted_group_sum(int kind, double p0, double p1, logw, logp, t):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lw = np.ascontiguousarray(logw, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lp = np.ascontiguousarray(logp, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef Py_ssize_t n = tt.shape[0], i
    cdef double acc = 0.0
    if lw.shape[0] != n or lp.shape[0] != n:
        raise ValueError("logw, logp and t must have the same length")
    with nogil:
        if kind == 3:
            # fold the weight into the exponential: one exp and one expm1 per node
            for i in range(n):
                if lp[i] < LOG_TINY:
                    continue
                acc += _abr(p0, p1, tt[i], lw[i] + lp[i])
        else:
            for i in range(n):
                if lp[i] < LOG_TINY:
                    continue
                acc += exp(lw[i] + lp[i]) * _g(kind, p0, p1, tt[i])
    return acc


def weighted_outer_sum(logw, scores):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lw = np.ascontiguousarray(logw, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], m = s.shape[1], i, j, k
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((m, m), dtype=np.float64)
    cdef double w
    if lw.shape[0] != n:
        raise ValueError("logw and scores must have the same number of rows")
    with nogil:
        for i in range(n):
            w = exp(lw[i])
            for j in range(m):
                for k in range(j, m):
                    out[j, k] += w * s[i, j] * s[i, k]
    for j in range(m):
        for k in range(j):
            out[j, k] = out[k, j]
    return out
