"""Backend selection for the inference kernels.

The compiled extension is used when it is importable; setting
``MMWPOWER_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

if os.environ.get("MMWPOWER_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernel as kernel
else:
    try:
        from . import _ckernel as kernel
    except ImportError:  # extension not built
        from . import _pykernel as kernel

BACKEND = kernel.BACKEND

__all__ = ["kernel", "BACKEND"]
