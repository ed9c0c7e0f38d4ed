"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise (or when
``FOILGEN_PURE_PYTHON=1``) the NumPy versions are used. Both expose the same
functions with the same results.
"""
import os

from . import _pykernels

if os.environ.get("FOILGEN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "numpy"

directed_min_dists = _impl.directed_min_dists
chamfer = _impl.chamfer
chamfer_one_to_many = _impl.chamfer_one_to_many
vortex_stream_influence = _impl.vortex_stream_influence
