"""Numeric kernel backend selection.

The compiled extension is preferred; the pure NumPy reference is used when
the extension is unavailable or AERODELTA_PURE_PYTHON is set to a nonempty
value. Both backends implement the identical interface; see pyref for the
documented reference semantics.
"""

import os

from . import pyref

if os.environ.get("AERODELTA_PURE_PYTHON"):
    _impl = pyref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pyref

BACKEND: str = _impl.BACKEND

solve_box_qp = _impl.solve_box_qp
delta_fk = _impl.delta_fk
delta_ik = _impl.delta_ik
plant_advance = _impl.plant_advance

__all__ = [
    "BACKEND",
    "solve_box_qp",
    "delta_fk",
    "delta_ik",
    "plant_advance",
    "pyref",
]
