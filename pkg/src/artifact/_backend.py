"""Select the compiled kernels when importable, else the pure-Python ones.

Set ``ARTIFACT_KERNELS=python`` to force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from artifact import _kernels_py


def _load(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    try:
        from artifact import _kernels
    except ImportError:
        if name == "compiled":
            raise
        return _kernels_py
    return _kernels


kernels: ModuleType = _load(os.environ.get("ARTIFACT_KERNELS", "auto"))


def use(name: str) -> ModuleType:
    """Switch backend at runtime ("compiled", "python" or "auto"); returns the module."""
    global kernels
    kernels = _load(name)
    return kernels


def active() -> str:
    return kernels.BACKEND
