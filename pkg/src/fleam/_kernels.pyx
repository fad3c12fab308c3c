# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar loops. ``_fallback.py`` mirrors every function operation for operation."""

import numpy as np


def lv_rk4(double a1, double a2, double a3, double a4,
           double i0, double n0, double h, Py_ssize_t steps):
    cdef double[:, ::1] out = np.empty((steps + 1, 2))
    cdef double I = i0, N = n0
    cdef double k1i, k1n, k2i, k2n, k3i, k3n, k4i, k4n, ti, tn
    cdef Py_ssize_t k
    out[0, 0] = I
    out[0, 1] = N
    for k in range(steps):
        k1i = a1 * I - a2 * I * N
        k1n = a3 * I * N - a4 * N
        ti = I + 0.5 * h * k1i
        tn = N + 0.5 * h * k1n
        k2i = a1 * ti - a2 * ti * tn
        k2n = a3 * ti * tn - a4 * tn
        ti = I + 0.5 * h * k2i
        tn = N + 0.5 * h * k2n
        k3i = a1 * ti - a2 * ti * tn
        k3n = a3 * ti * tn - a4 * tn
        ti = I + h * k3i
        tn = N + h * k3n
        k4i = a1 * ti - a2 * ti * tn
        k4n = a3 * ti * tn - a4 * tn
        I = I + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        N = N + h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
        out[k + 1, 0] = I
        out[k + 1, 1] = N
        if not (I > 0.0 and N > 0.0):
            return np.asarray(out[: k + 2]), k + 1
    return np.asarray(out), -1


def fifo_sojourn(const double[::1] arrivals, double service):
    cdef Py_ssize_t n = arrivals.shape[0], k
    cdef double[::1] out = np.empty(n)
    cdef double free_at = 0.0, start
    for k in range(n):
        start = arrivals[k] if arrivals[k] > free_at else free_at
        free_at = start + service
        out[k] = free_at - arrivals[k]
    return np.asarray(out)
