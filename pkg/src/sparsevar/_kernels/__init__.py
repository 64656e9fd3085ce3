"""Kernel backend selection.

The compiled Cython extension is used when it was built; otherwise the
pure-Python module with identical semantics is loaded. Setting
``SPARSEVAR_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SPARSEVAR_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

lasso_cd_gram = _impl.lasso_cd_gram
group_sweep = _impl.group_sweep

__all__ = ["BACKEND", "lasso_cd_gram", "group_sweep"]
