"""Backend selection for the averaging kernels.

The compiled extension is used when importable; setting the environment
variable ``COMPLEXITY_CCA_PURE_PYTHON=1`` forces the numpy fallback.
``BACKEND`` names the active implementation.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("COMPLEXITY_CCA_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
    else:
        BACKEND = "cython"

INDEX_DTYPE = np.int64


def row_means(indptr, indices, values, impl=None):
    """Average ``values`` over each row of a binary CSR pattern.

    ``values`` may be 1-D (one score per column of the pattern) or 2-D
    (one row of scores per column of the pattern).
    """
    impl = impl or _impl
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim == 1:
        return impl.row_means_1d(indptr, indices, values)
    return impl.row_means_2d(indptr, indices, values)


def reciprocal_step(prod_ptr, prod_idx, ctry_ptr, ctry_idx, country_scores, impl=None):
    """Return ``(C^c @ v, Xu @ v)`` for country scores ``v``."""
    impl = impl or _impl
    v = np.ascontiguousarray(country_scores, dtype=np.float64)
    return impl.reciprocal_step(prod_ptr, prod_idx, ctry_ptr, ctry_idx, v)


def implementation(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
