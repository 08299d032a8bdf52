"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``SQETRACK_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("SQETRACK_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
    NAME = "python"
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]

        NAME = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _pykernels
        NAME = "python"

__all__ = ["kernels", "NAME"]
