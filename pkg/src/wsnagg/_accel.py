"""Backend switch for the numeric kernels.

Kernels are compiled with numba when it is importable, unless the
``WSNAGG_DISABLE_NUMBA`` environment variable is set to a non-empty value
other than ``0``.  In that case the undecorated Python / numpy code runs.
The flag is read once, at import time.
"""
import os

_flag = os.environ.get("WSNAGG_DISABLE_NUMBA", "")
_disabled = _flag not in ("", "0")

try:
    if _disabled:
        raise ImportError("disabled by WSNAGG_DISABLE_NUMBA")
    from numba import njit as _njit
    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "python"


def maybe_jit(fn):
    """Compile ``fn`` in nopython mode if numba is active, else return it unchanged."""
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(fn)
    return fn
