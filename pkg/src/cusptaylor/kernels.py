"""Select the compiled stepping kernels when available, else the numpy ones.

Set CUSPTAYLOR_PURE_PYTHON=1 to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
advance = _pykernels.advance
compare_run = _pykernels.compare_run
psi_consts = _pykernels.psi_consts
trajectory = _pykernels.trajectory

if os.environ.get("CUSPTAYLOR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        advance = _ckernels.advance
        compare_run = _ckernels.compare_run
        psi_consts = _ckernels.psi_consts
        trajectory = _ckernels.trajectory


def backends():
    """Mapping name -> module for every kernel implementation that imports."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
