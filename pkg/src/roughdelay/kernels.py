"""Selects the compiled kernels when importable, else the numpy fallback.

Set ``ROUGHDELAY_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("ROUGHDELAY_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

interval_areas = _impl.interval_areas
chen_table = _impl.chen_table
affine_recursion = _impl.affine_recursion

__all__ = ["BACKEND", "interval_areas", "chen_table", "affine_recursion"]
