"""Kernel selection: compiled extension if importable, numpy otherwise.

Set ``HULLSCOPE_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os

from . import _fw_py

KERNELS = {"python": _fw_py.fw_run}

try:
    from . import _fwcore
except ImportError:  # extension not built
    _fwcore = None
else:
    KERNELS["cython"] = _fwcore.fw_run

if os.environ.get("HULLSCOPE_PURE_PYTHON", "").strip() not in ("", "0"):
    BACKEND = "python"
else:
    BACKEND = "cython" if "cython" in KERNELS else "python"


def get_kernel(name=None):
    name = BACKEND if name is None else name
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(KERNELS)}")
