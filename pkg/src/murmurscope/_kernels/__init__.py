"""Numeric kernels for shape evaluation and fit objectives.

The compiled Cython backend is preferred when the extension was built;
otherwise the NumPy implementation is used. Set MURMURSCOPE_PURE_PYTHON=1
to force the fallback (used by the benchmark and parity tests).
"""

import os

from . import _py

if os.environ.get("MURMURSCOPE_PURE_PYTHON"):
    _impl = _py
    BACKEND = "python"
else:
    try:
        from . import _cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _py
        BACKEND = "python"

shape_values = _impl.shape_values
fit_objective = _impl.fit_objective

KIND_N = _py.KIND_N
KIND_AS = _py.KIND_AS
KIND_MR = _py.KIND_MR
KIND_MVP = _py.KIND_MVP
KIND_MS = _py.KIND_MS


def available_backends():
    """Name -> module for every importable backend (for benchmarks/tests)."""
    backends = {"python": _py}
    try:
        from . import _cy  # type: ignore[attr-defined]

        backends["cython"] = _cy
    except ImportError:
        pass
    return backends
