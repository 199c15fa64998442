"""Valuation kernel selection.

Uses the compiled extension when it imported cleanly, the pure-Python twin
otherwise.  COALSENSE_BACKEND=python|compiled forces the choice (the
compiled one raising if unavailable), which the benchmark and the
cross-backend tests rely on.
"""

import os

from . import _purepy

__all__ = ["evaluate_coalition", "backend_name", "get_backend"]

_FORCED = os.environ.get("COALSENSE_BACKEND", "").strip().lower()

try:
    from . import _core
except ImportError:
    _core = None

if _FORCED == "python":
    _impl = _purepy
elif _FORCED == "compiled":
    if _core is None:
        raise ImportError(
            "COALSENSE_BACKEND=compiled but the extension is not built")
    _impl = _core
else:
    _impl = _core if _core is not None else _purepy

evaluate_coalition = _impl.evaluate_coalition


def backend_name() -> str:
    return _impl.BACKEND_NAME


def get_backend(name: str):
    """Return a specific kernel module ("python" or "compiled")."""
    if name == "python":
        return _purepy
    if name == "compiled":
        if _core is None:
            raise ImportError("compiled kernel not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")
