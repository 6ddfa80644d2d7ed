"""Strategy-scan backends: a numba-jitted loop and a pure-numpy fallback.

The scan evaluates a correlator expression on every deterministic sign
assignment (one ±1 per used party/setting slot) and returns the maximum
together with the first maximizing assignment index.  Slot j of the
assignment occupies bit (n_bits - 1 - j), so integer order on assignment
indices coincides with lexicographic order on the sign sequences when +1
precedes -1.

Backend selection: set BELLWIT_BACKEND=numpy to force the fallback,
BELLWIT_BACKEND=numba to require the jitted path.  Unset, numba is used
whenever it imports.  Both paths accumulate term contributions in the same
order, so they return bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENV_VAR = "BELLWIT_BACKEND"

_PARITY_SHIFTS = (32, 16, 8, 4, 2, 1)


def active_backend(override: str | None = None) -> str:
    """Resolve which scan implementation to use ('numba' or 'numpy')."""
    choice = override or os.environ.get(ENV_VAR, "").strip().lower() or None
    if choice is None:
        return "numba" if HAVE_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {choice!r}; expected 'numba' or 'numpy'")
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def _scan_python(masks, coeffs, n_bits):
    # Reference loop; only used via numba.  Kept separate so the numpy
    # fallback below can mirror its accumulation order exactly.
    best = -np.inf
    k_best = np.int64(0)
    n_terms = masks.shape[0]
    for k in range(np.int64(1) << np.int64(n_bits)):
        value = 0.0
        for t in range(n_terms):
            x = k & masks[t]
            x ^= x >> 32
            x ^= x >> 16
            x ^= x >> 8
            x ^= x >> 4
            x ^= x >> 2
            x ^= x >> 1
            if x & 1:
                value -= coeffs[t]
            else:
                value += coeffs[t]
        if value > best:
            best = value
            k_best = k
    return best, k_best


if HAVE_NUMBA:
    _scan_numba = njit(cache=True)(_scan_python)


def _scan_numpy(masks, coeffs, n_bits, chunk=1 << 16):
    total = 1 << int(n_bits)
    best = -np.inf
    k_best = 0
    for lo in range(0, total, chunk):
        ks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        values = np.zeros(ks.shape[0])
        for t in range(masks.shape[0]):
            x = ks & masks[t]
            for s in _PARITY_SHIFTS:
                x = x ^ (x >> s)
            values += coeffs[t] * (1.0 - 2.0 * (x & 1))
        i = int(np.argmax(values))
        if values[i] > best:
            best = float(values[i])
            k_best = int(ks[i])
    return best, k_best


def scan_strategies(masks, coeffs, n_bits, backend: str | None = None):
    """Return (max value, first maximizing assignment index) over all 2**n_bits
    deterministic sign assignments."""
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if active_backend(backend) == "numba":
        best, k_best = _scan_numba(masks, coeffs, np.int64(n_bits))
    else:
        best, k_best = _scan_numpy(masks, coeffs, n_bits)
    return float(best), int(k_best)
