# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: scalar inner loops for shape evaluation and fit objectives.

Mirrors _py.py exactly; see that module for the shape/parameter conventions.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

KIND_N = 0
KIND_AS = 1
KIND_MR = 2
KIND_MVP = 3
KIND_MS = 4


cdef inline double _eval_point(int kind, const double* tau, const double* pi, double t) noexcept nogil:
    cdef double t1, tL, v, inner
    if kind == 0:
        return 0.0
    t1 = tau[0]
    if kind == 1:
        tL = tau[2]
    elif kind == 2:
        tL = tau[1]
    elif kind == 3:
        tL = tau[3]
    else:
        tL = tau[4]
    if t < t1 or t >= tL:
        return 0.0
    if kind == 2:
        return pi[0]
    v = pi[0] + pi[1] * (t - t1)
    if kind == 1:
        if t >= tau[1]:
            v = v + (-(pi[1] + pi[2]) * (t - tau[1]))
    elif kind == 3:
        if t >= tau[1]:
            inner = 0.0
            if t >= tau[2]:
                inner = pi[1] * (t - tau[2])
            v = v + (-2.0 * pi[1] * (t - tau[1]) + inner)
    else:
        if t >= tau[1]:
            inner = 0.0
            if t >= tau[2]:
                inner = pi[1] * (t - tau[2])
                if t >= tau[3]:
                    inner = inner + pi[2] * (t - tau[3])
            v = v + (-2.0 * pi[1] * (t - tau[1]) + inner)
    return v


def shape_values(int kind, tau, pi, t):
    """Evaluate one murmur shape family at times ``t`` (1-D float array)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_arr = np.ascontiguousarray(t, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tau_arr = np.ascontiguousarray(tau, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi_arr = np.ascontiguousarray(pi, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(t_arr.shape[0], dtype=np.float64)
    cdef Py_ssize_t i, n = t_arr.shape[0]
    cdef const double* tau_p = NULL
    cdef const double* pi_p = NULL
    if kind < 0 or kind > 4:
        raise ValueError(f"unknown shape kind {kind}")
    if tau_arr.shape[0] > 0:
        tau_p = &tau_arr[0]
    if pi_arr.shape[0] > 0:
        pi_p = &pi_arr[0]
    for i in range(n):
        out[i] = _eval_point(kind, tau_p, pi_p, t_arr[i])
    return out


def fit_objective(int kind, tau, pi, t, a):
    """Mean squared residual of the shape against amplitudes ``a`` at ``t``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_arr = np.ascontiguousarray(t, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a_arr = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tau_arr = np.ascontiguousarray(tau, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi_arr = np.ascontiguousarray(pi, dtype=np.float64)
    cdef Py_ssize_t i, n = t_arr.shape[0]
    cdef double acc = 0.0, r
    cdef const double* tau_p = NULL
    cdef const double* pi_p = NULL
    if n == 0:
        return 0.0
    if kind < 0 or kind > 4:
        raise ValueError(f"unknown shape kind {kind}")
    if tau_arr.shape[0] > 0:
        tau_p = &tau_arr[0]
    if pi_arr.shape[0] > 0:
        pi_p = &pi_arr[0]
    for i in range(n):
        r = _eval_point(kind, tau_p, pi_p, t_arr[i]) - a_arr[i]
        acc += r * r
    return acc / n
