"""Hot kernels with a compiled implementation and a numpy fallback.

The compiled extension is picked at import when it was built; setting
``MATCOARSEN_PURE_PYTHON=1`` forces the fallback. Both backends produce
bit-identical output.
"""
import os

from . import _pymatch

__all__ = ["BACKEND", "available_backends", "get_match_kernel"]

_KERNELS = {"python": _pymatch.match_columns}

try:
    from ._cmatch import match_columns as _c_match_columns
except ImportError:  # extension not built
    pass
else:
    _KERNELS["cython"] = _c_match_columns

if os.environ.get("MATCOARSEN_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    BACKEND = "python"
else:
    BACKEND = "cython" if "cython" in _KERNELS else "python"


def available_backends():
    return sorted(_KERNELS)


def get_match_kernel(backend=None):
    """Return the matching kernel for ``backend`` (default: the import-time choice)."""
    name = BACKEND if backend is None else backend
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None
