"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``IMPRECISE_LAB_PURE=1`` in the environment to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("IMPRECISE_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

polyline_distance = _impl.polyline_distance
fold_distances = _impl.fold_distances
window_extrema = _impl.window_extrema
categorical_draw = _impl.categorical_draw


def backends():
    """Map of available backend names to kernel modules."""
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        return out
    out["cython"] = _kernels
    return out
