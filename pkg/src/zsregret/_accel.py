"""Optional numba acceleration.

Set ``ZSREGRET_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
Both paths draw from the same ``numpy.random.Generator`` streams, so they
produce identical trajectories.
"""
import os

DISABLED = os.environ.get("ZSREGRET_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """Drop-in for ``numba.njit`` that becomes the identity when disabled."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend():
    return "numba" if HAS_NUMBA else "numpy"
