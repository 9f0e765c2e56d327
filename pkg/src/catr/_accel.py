"""Numba availability and backend selection.

Set ``CATR_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when numba
is installed.
"""
import os

try:
    import numba  # noqa: F401
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def numba_enabled() -> bool:
    return HAS_NUMBA and os.environ.get("CATR_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"
