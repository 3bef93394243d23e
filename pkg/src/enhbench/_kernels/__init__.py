"""Hot pixel kernels: compiled core with a pure-NumPy fallback.

The compiled extension is selected at import when present; set
``ENHBENCH_NO_EXT=1`` to force the fallback (used by the benchmark to
compare both paths). Both backends implement identical semantics.
"""

import os

if os.environ.get("ENHBENCH_NO_EXT"):
    from . import _fallback as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl

        BACKEND = "numpy"

convolve2d_mirror = _impl.convolve2d_mirror
bilateral_filter = _impl.bilateral_filter

__all__ = ["BACKEND", "convolve2d_mirror", "bilateral_filter"]
