"""Backend selection for the RK4 kernels.

The compiled extension is used when it imports; set ``NETDECIDE_PURE=1`` to
force the NumPy fallback.
"""

import os

from . import _pykernels

if os.environ.get("NETDECIDE_PURE") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
rk4_network = _impl.rk4_network
rk4_closed_loop_uniform = _impl.rk4_closed_loop_uniform
rk4_closed_loop_general = _impl.rk4_closed_loop_general


def available_backends():
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
