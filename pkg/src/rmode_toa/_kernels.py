"""Kernel backend selection.

The compiled extension is preferred; set ``RMODE_TOA_PURE=1`` to force the
numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("RMODE_TOA_PURE"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

unwrap = _impl.unwrap
window_stats = _impl.window_stats
