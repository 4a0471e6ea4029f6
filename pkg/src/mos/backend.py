"""Kernel backend selection.

The expert-block forward/backward is the hot inner loop of training; a
compiled Cython twin is used when available. ``MOS_BACKEND`` forces the
choice: "native", "python", or "auto" (default: native if built).
Both backends implement identical math on float64; results agree to
rounding (~1e-12 relative), not bit-for-bit, so a single run must stay on
one backend for reproducibility (it always does: selection is import-time).
"""

from __future__ import annotations

import os

from .exceptions import ConfigError
from .nn import attention as _py

_choice = os.environ.get("MOS_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "native", "python"):
    raise ConfigError(f"MOS_BACKEND must be auto|native|python, got {_choice!r}")

_native = None
if _choice in ("auto", "native"):
    try:
        from . import _kernels as _native  # type: ignore[attr-defined]
    except ImportError:
        _native = None
        if _choice == "native":
            raise ConfigError("MOS_BACKEND=native but the compiled kernels are not built")

if _native is not None:
    block_forward = _native.block_forward
    block_backward = _native.block_backward
    BACKEND = "native"
else:
    block_forward = _py.block_forward
    block_backward = _py.block_backward
    BACKEND = "python"


def backend_name() -> str:
    return BACKEND
