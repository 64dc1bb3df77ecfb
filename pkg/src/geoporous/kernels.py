"""Backend selection for the hot loops.

The compiled extension is used when it imported cleanly; set
``GEOPOROUS_PURE_PYTHON=1`` to force the numpy fallback.
"""
from __future__ import annotations

import os

from geoporous import _pykernels

_impl = _pykernels
BACKEND = "numpy"
if not os.environ.get("GEOPOROUS_PURE_PYTHON"):
    try:
        from geoporous import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

max_pair_quotient = _impl.max_pair_quotient
row_max_quotient = _impl.row_max_quotient
directed_hausdorff = _impl.directed_hausdorff
weighted_inf = _impl.weighted_inf


def available_backends():
    """Map backend name to module for every importable implementation."""
    out = {"numpy": _pykernels}
    try:
        from geoporous import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
