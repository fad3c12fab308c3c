"""Pure-Python versions of the compiled kernels, used when the extension is absent."""

import numpy as np


def lv_rk4(a1, a2, a3, a4, i0, n0, h, steps):
    out = np.empty((steps + 1, 2))
    I, N = float(i0), float(n0)
    out[0] = I, N
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
        out[k + 1] = I, N
        if not (I > 0.0 and N > 0.0):
            return out[: k + 2], k + 1
    return out, -1


def fifo_sojourn(arrivals, service):
    out = np.empty(len(arrivals))
    free_at = 0.0
    for k, a in enumerate(arrivals):
        a = float(a)
        start = a if a > free_at else free_at
        free_at = start + service
        out[k] = free_at - a
    return out
