"""Backend selection for the scalar hot loops.

The Cython extension is used when it was built; otherwise, or when
``FLEAM_PURE_PYTHON=1`` is set, the pure-Python module is used. Both produce
bit-identical results.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("FLEAM_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def lv_rk4(a1, a2, a3, a4, i0, n0, h, steps):
    """Fixed-step RK4 for the predator-prey pair.

    Returns ``(trajectory, failed_at)`` where ``trajectory`` has shape
    ``(steps + 1, 2)`` and ``failed_at`` is -1, or the index of the first
    non-positive state (the trajectory is truncated there).
    """
    return _impl.lv_rk4(float(a1), float(a2), float(a3), float(a4),
                        float(i0), float(n0), float(h), int(steps))


def fifo_sojourn(arrivals, service):
    """Sojourn (wait + service) of each job in a single-server FIFO queue.

    ``arrivals`` must be sorted ascending.
    """
    arr = np.ascontiguousarray(arrivals, dtype=np.float64)
    return _impl.fifo_sojourn(arr, float(service))
