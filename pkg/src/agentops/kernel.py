"""Backend selection for the iteration kernel.

The compiled extension is used when it was built; otherwise the pure-Python
twin is loaded.  Set ``AGENTOPS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

_FORCE_PURE = os.environ.get("AGENTOPS_PURE_PYTHON", "").lower() in ("1", "true", "yes")

if _ckernel is not None and not _FORCE_PURE:
    BACKEND = "cython"
    run = _ckernel.run
else:
    BACKEND = "python"
    run = _pykernel.run


def backends():
    """Map of available backend name to ``run`` callable."""
    out = {"python": _pykernel.run}
    if _ckernel is not None:
        out["cython"] = _ckernel.run
    return out
