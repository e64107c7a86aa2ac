"""Kernel backend selection.

The compiled Cython extension (``_core``) is preferred; the NumPy reference
module (``_ref``) is the drop-in fallback.  Set ``EMOPIPE_BACKEND=python`` to
force the fallback (used by the benchmark and by backend-equivalence tests).
Both expose ``sosfilt``, ``window_variances`` and ``best_split`` with
identical signatures and matching semantics.
"""

import os

from . import _ref

if os.environ.get("EMOPIPE_BACKEND", "").lower() == "python":
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

sosfilt = _impl.sosfilt
window_variances = _impl.window_variances
best_split = _impl.best_split

__all__ = ["BACKEND", "sosfilt", "window_variances", "best_split"]
