"""Kernel backend selection.

The compiled Cython extension is preferred; the NumPy fallback is used when
the extension is missing or when ``RANKPCA_PURE_PYTHON`` is set in the
environment (useful for benchmarking the two backends against each other).
"""

import os

from . import fallback

if os.environ.get("RANKPCA_PURE_PYTHON"):
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "python"

tpower_loop = _impl.tpower_loop
enet_cd = _impl.enet_cd
STATUS_OK = fallback.STATUS_OK
STATUS_ZERO_PRODUCT = fallback.STATUS_ZERO_PRODUCT

__all__ = ["tpower_loop", "enet_cd", "BACKEND", "STATUS_OK", "STATUS_ZERO_PRODUCT", "fallback"]
