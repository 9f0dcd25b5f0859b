"""Backend selection for the per-slot kernels.

The compiled extension is used when it imports; otherwise, or when the
``BATON_PURE_PYTHON`` environment variable is set to a non-empty value other
than ``0``, the numpy reference implementation is used.  Callers must go
through attribute access on this module (``kernels.dead_reckon``) so that
:func:`set_backend` takes effect everywhere.
"""
import os

from baton import _pykernels
from baton._pykernels import (  # noqa: F401  (constants are shared by both backends)
    CASE_ALLMISSING,
    CASE_CROSSLINK,
    CASE_OBSERVED,
    MODE_FULL,
    MODE_PRED1,
    MODE_PRED12,
    MODE_PRED13,
    MODE_PRED2,
    MODE_PRED3,
    STATUS_DEGENERATE,
    STATUS_INSUFFICIENT,
    STATUS_OK,
    STATUS_SINGULAR,
)

try:
    from baton import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_EXPORTS = ("fresnel_matrix", "solve_velocity", "dead_reckon", "offset_fit", "pred2_row", "fill_row")

BACKEND = "python"


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


def set_backend(name):
    """Switch every kernel to ``"cython"`` or ``"python"``."""
    global BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        mod = _compiled
    elif name == "python":
        mod = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    g = globals()
    for fn in _EXPORTS:
        g[fn] = getattr(mod, fn)
    BACKEND = name


def _default_backend():
    forced = os.environ.get("BATON_PURE_PYTHON", "")
    if forced not in ("", "0") or _compiled is None:
        return "python"
    return "cython"


set_backend(_default_backend())
