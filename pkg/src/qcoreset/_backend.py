"""Kernel backend selection.

The compiled extension is used when importable; ``QCORESET_BACKEND=python``
forces the fallback.  ``BACKEND`` names the active one.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _ext
except ImportError:  # extension not built
    _ext = None

_forced = os.environ.get("QCORESET_BACKEND", "").lower()
if _forced not in ("", "python", "cython"):
    raise ImportError(f"QCORESET_BACKEND={_forced!r}; expected 'python' or 'cython'")
if _forced == "cython" and _ext is None:
    raise ImportError("QCORESET_BACKEND=cython but the extension is not built")

_impl = _fallback if (_ext is None or _forced == "python") else _ext
BACKEND = "python" if _impl is _fallback else "cython"

gram_overlaps = _impl.gram_overlaps
cross_overlaps = _impl.cross_overlaps
smo_solve = _impl.smo_solve
jacobi_eig = _impl.jacobi_eig


def available() -> dict:
    """Every importable backend module keyed by name."""
    out = {"python": _fallback}
    if _ext is not None:
        out["cython"] = _ext
    return out
