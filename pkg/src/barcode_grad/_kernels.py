"""Select the compiled kernels when available, else the pure-Python ones.

Set ``BARCODE_GRAD_PURE=1`` to force the fallback.
"""
import os

from . import _core_py

BACKEND = "python"
reduce_boundary = _core_py.reduce_boundary
max_matching = _core_py.max_matching

if os.environ.get("BARCODE_GRAD_PURE", "") != "1":
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        reduce_boundary = _core.reduce_boundary
        max_matching = _core.max_matching

__all__ = ["BACKEND", "reduce_boundary", "max_matching"]
