"""Hot kernels: the compiled extension when built, else the pure-Python twin.

Set ``EMRANGE_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"

if os.environ.get("EMRANGE_PURE_PYTHON", "") in ("", "0"):
    try:
        from ._ckernels import (  # noqa: F401
            LRUCore, filter_2d, filter_3s, scan_yasc, scan_ydesc,
        )
        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._pykernels import (  # noqa: F401
        LRUCore, filter_2d, filter_3s, scan_yasc, scan_ydesc,
    )

MISS = 1
EVICTED_DIRTY = 2

__all__ = [
    "BACKEND", "LRUCore", "MISS", "EVICTED_DIRTY",
    "filter_2d", "filter_3s", "scan_yasc", "scan_ydesc",
]
