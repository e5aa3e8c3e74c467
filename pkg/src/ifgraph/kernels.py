"""Backend selection for the hot loops.

The compiled extension is used when it was built and ``IFGRAPH_PURE_PYTHON``
is unset; otherwise the numpy implementation is used.  Both expose the same
functions with identical results.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from . import _pykernels


def get_backend(name: str = "auto") -> ModuleType:
    """Return a kernel module: ``"cython"``, ``"python"`` or ``"auto"``."""
    if name == "python":
        return _pykernels
    if name in ("cython", "auto"):
        try:
            return importlib.import_module("ifgraph._ckernels")
        except ImportError:
            if name == "cython":
                raise
            return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


_impl = get_backend("python" if os.environ.get("IFGRAPH_PURE_PYTHON") else "auto")
BACKEND: str = _impl.NAME

simulate_block = _impl.simulate_block
simulate_block_queued = _impl.simulate_block_queued
first_hitting_combo = _impl.first_hitting_combo
