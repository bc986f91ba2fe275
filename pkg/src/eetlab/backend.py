"""Selects the convolution inner-loop implementation at import time.

The compiled Cython kernel is preferred; the numpy fallback produces
bit-identical results (same operation order, no FMA) and is used when the
extension was not built. ``EETLAB_BACKEND=numpy`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _convkern_py

try:
    from . import _convkern  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover
    _convkern = None

if _convkern is not None and os.environ.get("EETLAB_BACKEND", "").lower() != "numpy":
    BACKEND = "cython"
    conv_step_sym = _convkern.conv_step_sym
else:
    BACKEND = "numpy"
    conv_step_sym = _convkern_py.conv_step_sym


def available_backends() -> dict:
    """Name -> conv_step_sym callable, for benchmarks and equality tests."""
    out = {"numpy": _convkern_py.conv_step_sym}
    if _convkern is not None:
        out["cython"] = _convkern.conv_step_sym
    return out
