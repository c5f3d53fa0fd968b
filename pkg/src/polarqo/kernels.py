"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``POLARQO_KERNELS=python`` in the environment to force the pure numpy
implementation.  :data:`BACKEND` names the implementation chosen at import.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["BACKEND", "available", "get", "rotate_batch", "loop_phase"]


def available() -> tuple:
    """Names of the kernel implementations that can be loaded."""
    return ("compiled", "python") if _compiled is not None else ("python",)


def get(name: str):
    """Module implementing the kernels for ``name`` ('compiled' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


_wanted = os.environ.get("POLARQO_KERNELS", "").strip().lower()
if _wanted == "python" or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

_active = get(BACKEND)
rotate_batch = _active.rotate_batch
loop_phase = _active.loop_phase
