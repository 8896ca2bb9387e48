"""Pick the event-loop implementation at import time.

The compiled kernel is used when it was built; ``ZRPFLUID_PURE_PYTHON=1``
forces the Python fallback.
"""

import os

from . import _pykernel

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

KERNELS = {"python": _pykernel.run_chunk}
if _kernel is not None:
    KERNELS["cython"] = _kernel.run_chunk

if os.environ.get("ZRPFLUID_PURE_PYTHON") or _kernel is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_kernel(name=None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable; have {sorted(KERNELS)}") from None
