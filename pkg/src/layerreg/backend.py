"""Select the summation backend at import.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback.  Setting LAYERREG_BACKEND=python forces the fallback.
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("LAYERREG_BACKEND", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _core as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

_MODULES = {"cython": _impl if BACKEND == "cython" else None, "python": _fallback}


def get(name=None):
    """Module implementing the sums: 'cython', 'python' or None for the default."""
    if name is None:
        return _impl
    mod = _MODULES.get(name)
    if mod is None:
        raise ImportError(f"backend {name!r} is unavailable")
    return mod


def f64(a, ncols=None):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if ncols is not None:
        a = a.reshape(-1, ncols)
    return a


def i8(a):
    return np.ascontiguousarray(a, dtype=np.int8)
