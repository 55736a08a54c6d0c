"""Backend selection for the unit-modulus hot kernels.

The compiled Cython module is preferred when importable; the numpy
fallback is used otherwise, or when the environment variable
``MANIFOLD_RIS_PURE`` is set to a non-empty value.  ``BACKEND`` records
which one is active ("compiled" or "pure").
"""

import os

from . import _pure

_FORCE_PURE = bool(os.environ.get("MANIFOLD_RIS_PURE"))

if not _FORCE_PURE:
    try:
        from . import _speedups as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"
else:
    _impl = _pure
    BACKEND = "pure"

ccm_project = _impl.ccm_project
ccm_retract = _impl.ccm_retract
ccm_normalize = _impl.ccm_normalize
ccm_max_dev = _impl.ccm_max_dev
ccm_tangent_dev = _impl.ccm_tangent_dev
real_inner = _impl.real_inner

__all__ = [
    "BACKEND",
    "ccm_project",
    "ccm_retract",
    "ccm_normalize",
    "ccm_max_dev",
    "ccm_tangent_dev",
    "real_inner",
]
