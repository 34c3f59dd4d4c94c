"""Kernel backend selection.

The compiled extension is preferred when present; the numpy fallback is
API-identical.  Set GEOCERT_BACKEND=python to force the fallback (the
benchmark uses this to compare both on one machine).
"""

import os

from . import _numpy

SURFACE_CODES = _numpy.SURFACE_CODES

_forced = os.environ.get("GEOCERT_BACKEND", "").lower()
_impl = None
if _forced in ("", "compiled", "c"):
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = None
if _impl is None:
    if _forced in ("compiled", "c"):
        raise ImportError("compiled kernel backend requested but not built")
    _impl = _numpy
    BACKEND = "python"

jet_batch = _impl.jet_batch
fundamental_batch = _impl.fundamental_batch
radial_state_batch = _impl.radial_state_batch
surface_fundamental = _impl.surface_fundamental
surface_radial_state = _impl.surface_radial_state
