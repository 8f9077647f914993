"""Selects the integration kernel at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable MARTINETKIT_PURE is set to a non-empty value, the
pure-Python kernel is used. Both expose the same `integrate` function.
"""
from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("MARTINETKIT_PURE"):
    _impl = _kernel_py
else:
    try:
        from . import _speedups as _impl
    except ImportError:  # extension not built
        _impl = _kernel_py

BACKEND = "compiled" if _impl is not _kernel_py else "python"
integrate = _impl.integrate
integrate_python = _kernel_py.integrate


def integrate_compiled():
    """The compiled integrate function, or None when the extension is unavailable."""
    try:
        from . import _speedups
    except ImportError:
        return None
    return _speedups.integrate


def resolve(backend=None):
    """Map None, "python", "compiled" or a callable to an integrate function."""
    if backend is None:
        return integrate
    if callable(backend):
        return backend
    if backend == "python":
        return integrate_python
    if backend == "compiled":
        fn = integrate_compiled()
        if fn is None:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return fn
    raise ValueError(f"unknown backend {backend!r}")
