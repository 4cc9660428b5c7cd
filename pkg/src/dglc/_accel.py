"""Numba switch.

Set ``DGLC_DISABLE_NUMBA=1`` to force the pure-numpy code paths. When numba
is missing the numpy paths are used regardless of the flag.
"""

import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


def _flag_disabled() -> bool:
    return os.environ.get("DGLC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = NUMBA_AVAILABLE and not _flag_disabled()

__all__ = ["njit", "NUMBA_AVAILABLE", "USE_NUMBA"]
