"""Hot kernels: the compiled extension when available, numpy otherwise.

Set ``COLORCENTER_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python

BACKEND = "python"
compiled = None

if os.environ.get("COLORCENTER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
        BACKEND = "cython"
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else python

vibronic_coo = _impl.vibronic_coo
fc_overlap_table = _impl.fc_overlap_table
dipolar_sum = _impl.dipolar_sum

__all__ = ["BACKEND", "vibronic_coo", "fc_overlap_table", "dipolar_sum", "python", "compiled"]
