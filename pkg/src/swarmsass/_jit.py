"""Numba switch.

Kernels are compiled with numba unless ``SWARMSASS_DISABLE_NUMBA`` is set to a
truthy value or numba cannot be imported; in that case the pure-numpy variants
in :mod:`swarmsass.kernels` are used instead.
"""

import os

_DISABLED = os.environ.get("SWARMSASS_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False
    _numba_njit = None

USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator
