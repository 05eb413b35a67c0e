"""Numba switch.

Set ``PSEUDOMARGINAL_DISABLE_NUMBA=1`` to force the pure-numpy code paths.
Both paths consume the random stream in the same order, so a chain gives
the same trace either way up to floating-point rounding.
"""

import os

_DISABLED = os.environ.get("PSEUDOMARGINAL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def njit(func):
    if not NUMBA_AVAILABLE:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
