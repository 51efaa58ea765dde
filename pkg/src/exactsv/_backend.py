"""Select the kernel backend at import time.

``EXACTSV_BACKEND=python`` forces the pure-Python kernels and
``EXACTSV_BACKEND=compiled`` makes a missing extension an import error.
"""
import os

_choice = os.environ.get("EXACTSV_BACKEND", "auto").strip().lower()

if _choice == "python":
    from . import _pycore as core
elif _choice == "compiled":
    from . import _core as core
elif _choice == "auto":
    try:
        from . import _core as core
    except ImportError:
        from . import _pycore as core
else:
    raise ImportError(f"unknown EXACTSV_BACKEND value {_choice!r}")

BACKEND = core.BACKEND

__all__ = ["core", "BACKEND"]
