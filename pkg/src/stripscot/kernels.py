"""Select the search kernel implementation at import time.

The compiled extension is used when it was built; otherwise the pure
Python module is. Set ``STRIPSCOT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_kernels

try:
    if os.environ.get("STRIPSCOT_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python kernels requested")
    from . import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None

active = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"

FOUND = python_kernels.FOUND
EXHAUSTED = python_kernels.EXHAUSTED
NODE_LIMIT = python_kernels.NODE_LIMIT
TIME_LIMIT = python_kernels.TIME_LIMIT
DEPTH_LIMIT = python_kernels.DEPTH_LIMIT

bfs = active.bfs
reachable = active.reachable
