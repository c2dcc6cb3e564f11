"""Numba switch.

Set ``WPLAB_DISABLE_NUMBA=1`` before import to run every kernel on the
pure numpy / Python path.
"""
import os

_DISABLED = os.environ.get("WPLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("disabled by WPLAB_DISABLE_NUMBA")
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def njit(func):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func
