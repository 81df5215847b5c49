"""Numba switch.

Set ``TOUCHAUTH_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT``) to
route every hot kernel through its pure-numpy twin instead.
"""
import os

_DISABLED = bool(os.environ.get("TOUCHAUTH_DISABLE_NUMBA")) or bool(
    os.environ.get("NUMBA_DISABLE_JIT")
)

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
    njit = numba.njit(nogil=True, cache=True)
except ImportError:
    HAVE_NUMBA = False

    def njit(f):
        return f


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
