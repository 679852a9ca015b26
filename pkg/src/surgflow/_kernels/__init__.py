"""Numerical kernels: compiled extension when built, numpy fallback otherwise.

Set SURGFLOW_FORCE_FALLBACK=1 to ignore a built extension (used by the
benchmark and the backend-equivalence tests).
"""
import os

from . import _fallback

if os.environ.get("SURGFLOW_FORCE_FALLBACK") == "1":
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

cotan_weights = _impl.cotan_weights
levelset_speed = _impl.levelset_speed
reinit_step = _impl.reinit_step

fallback = _fallback
