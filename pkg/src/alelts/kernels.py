"""Backend selection for the hot kernels.

The compiled extension ``alelts._kernels`` is used when it has been built;
otherwise the NumPy implementation in :mod:`alelts._kernels_py` is used.  Set
``ALELTS_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
predictor = _kernels_py.predictor

if os.environ.get("ALELTS_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        predictor = _compiled.predictor
