"""Kernel backend selection.

The compiled extension is used when it imports; set ``RLCS_PURE_PYTHON=1`` to
force the pure-Python fallback. ``BACKEND`` names the active one.
"""
from __future__ import annotations

import os

from rlcs import _pykernels

if os.environ.get("RLCS_PURE_PYTHON", "") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from rlcs import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

levenshtein = _impl.levenshtein
cubic_resample = _impl.cubic_resample
lpt = _impl.lpt
ffd = _impl.ffd

__all__ = ["BACKEND", "levenshtein", "cubic_resample", "lpt", "ffd"]
