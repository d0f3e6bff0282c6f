"""Backend selection for the ray-casting kernels.

The compiled module is used when it was built; otherwise, or when
``BWP_KERNELS=python`` is set, the numpy fallback is used.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("BWP_KERNELS", "").lower() == "python" or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]
first_hits = _impl.first_hits
all_hits = _impl.all_hits
