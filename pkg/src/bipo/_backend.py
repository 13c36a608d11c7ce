"""Kernel backend selection.

The compiled extension is used when it imports; ``BIPO_BACKEND=python``
forces the numpy fallback. ``BIPO_THREADS`` caps the OpenMP workers of the
compiled kernels.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if os.environ.get("BIPO_BACKEND", "").lower() == "python" or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

kernels = BACKENDS[BACKEND]


def get(name=None):
    """Kernel module by name (``"python"`` or ``"cython"``); default is the active one."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise RuntimeError(f"kernel backend {name!r} is not available") from None


def num_threads() -> int:
    env = os.environ.get("BIPO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
