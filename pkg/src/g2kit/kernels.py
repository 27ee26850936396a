"""Hot numeric kernels for second-order jet arithmetic.

Every field-level computation in the package funnels through jet products
and chain-rule compositions, so these two small kernels dominate runtime.
Both carry a numba ``@njit`` build and a pure-numpy fallback; the active
backend is chosen at import from the ``G2KIT_NO_NUMBA`` environment
variable and can be switched at runtime with :func:`set_backend` (used by
the benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

N = 7


def _mul_numpy(va, ga, ha, vb, gb, hb):
    v = va * vb
    g = va * gb + vb * ga
    h = va * hb + vb * ha + np.outer(ga, gb) + np.outer(gb, ga)
    return v, g, h


def _compose_numpy(v, g, h, f0, f1, f2):
    # f(u) with u = (v, g, h): chain rule to second order.
    return f0, f1 * g, f1 * h + f2 * np.outer(g, g)


_HAVE_NUMBA = False
try:
    if os.environ.get("G2KIT_NO_NUMBA", "") not in ("1", "true", "yes"):
        import numba

        _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def _mul_numba(va, ga, ha, vb, gb, hb):  # pragma: no cover - numba
        g = np.empty(N)
        h = np.empty((N, N))
        for i in range(N):
            g[i] = va * gb[i] + vb * ga[i]
            for j in range(N):
                h[i, j] = va * hb[i, j] + vb * ha[i, j] + ga[i] * gb[j] + gb[i] * ga[j]
        return va * vb, g, h

    @numba.njit(cache=True, fastmath=False)
    def _compose_numba(v, g, h, f0, f1, f2):  # pragma: no cover - numba
        go = np.empty(N)
        ho = np.empty((N, N))
        for i in range(N):
            go[i] = f1 * g[i]
            for j in range(N):
                ho[i, j] = f1 * h[i, j] + f2 * g[i] * g[j]
        return f0, go, ho


jet_mul = _mul_numpy
jet_compose = _compose_numpy
backend_name = "numpy"


def set_backend(name):
    """Select 'numba' or 'numpy' for the jet kernels. Returns the active name."""
    global jet_mul, jet_compose, backend_name
    if name == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        jet_mul, jet_compose = _mul_numba, _compose_numba
        backend_name = "numba"
    elif name == "numpy":
        jet_mul, jet_compose = _mul_numpy, _compose_numpy
        backend_name = "numpy"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return backend_name


def available_backends():
    return ("numpy", "numba") if _HAVE_NUMBA else ("numpy",)


if _HAVE_NUMBA:
    set_backend("numba")
