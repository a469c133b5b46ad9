"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin is used. Setting ``DIOL_PURE_PYTHON=1`` forces the fallback. Both
backends produce bitwise-identical results.
"""

import importlib
import os

from . import _kernels_py

_FORCE_PURE = os.environ.get("DIOL_PURE_PYTHON", "").strip() not in ("", "0")

if _FORCE_PURE:
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

rms_windows = _impl.rms_windows
rolling_mean_std = _impl.rolling_mean_std
column_mean_std = _impl.column_mean_std
assign_points = _impl.assign_points
lloyd = _impl.lloyd
xorshift_next = _impl.xorshift_next
normal_fill = _impl.normal_fill
render_current = _impl.render_current


def available_backends():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    try:
        importlib.import_module("diol._kernels")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def load_backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("diol._kernels")
    raise ValueError(f"unknown kernel backend {name!r}")
