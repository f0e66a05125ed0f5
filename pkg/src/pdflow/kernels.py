"""Backend selection for the stepping kernel.

The compiled Cython kernel is used when its extension module imported
successfully; otherwise the pure-Python kernel takes over with identical
semantics.  Set the environment variable ``PDFLOW_PURE_PYTHON=1`` before
import to force the fallback (used by the backend-comparison tests and
the benchmark).
"""

import os

from pdflow import _kernels_py

_FORCE_PYTHON = os.environ.get("PDFLOW_PURE_PYTHON", "").strip().lower() in (
    "1",
    "true",
    "yes",
)

if not _FORCE_PYTHON:
    try:
        from pdflow import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME

EULER = _kernels_py.EULER
RK4 = _kernels_py.RK4
STATUS_HORIZON = _kernels_py.STATUS_HORIZON
STATUS_KKT = _kernels_py.STATUS_KKT
STATUS_DIVERGED = _kernels_py.STATUS_DIVERGED
STATUS_NONFINITE = _kernels_py.STATUS_NONFINITE

run_quadratic = _impl.run_quadratic
run_callable = _kernels_py.run_callable
