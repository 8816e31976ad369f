"""Pick the kernel implementation at import time.

The compiled extension is preferred; set ``WISHART_EIG_PURE_PYTHON=1`` to
force the numpy fallback.
"""

import os

if os.environ.get("WISHART_EIG_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

BACKEND = kernels.NAME

__all__ = ["kernels", "BACKEND"]
