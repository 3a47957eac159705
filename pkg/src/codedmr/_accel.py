"""Backend selection for the numeric kernels.

Numba is used when it is importable and ``CMR_DISABLE_NUMBA`` is unset (or
``0``). Setting ``CMR_DISABLE_NUMBA=1`` forces the pure-numpy paths, which is
how the benchmark and the equivalence tests exercise both implementations.
"""

import os

_FLAG = os.environ.get("CMR_DISABLE_NUMBA", "0").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise.

    The decorated function is still defined (and callable as plain Python)
    without numba, so the numba-flavoured kernels stay importable everywhere.
    """
    kwargs.setdefault("cache", True)

    def wrap(f):
        if numba is None:
            return f
        return numba.njit(**kwargs)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
