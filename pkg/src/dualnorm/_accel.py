"""Numba switch.

Set ``DUALNORM_DISABLE_NUMBA=1`` to force the pure NumPy kernels, e.g. when
debugging or when numba is unavailable. The flag is read once at import.
"""

import os

_disabled = os.environ.get("DUALNORM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA
