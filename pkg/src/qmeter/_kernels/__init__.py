"""Hot Monte Carlo and time-stepping kernels.

The compiled Cython module is used when it was built at install time; the
numpy implementation in :mod:`._fallback` is selected otherwise, or when the
environment variable ``QMETER_PURE_PYTHON`` is set to a non-empty value.
"""

import os

from . import _fallback as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("QMETER_PURE_PYTHON"):
    BACKEND = "cython"
    _active = compiled_backend
else:
    BACKEND = "python"
    _active = python_backend

weak_walk = _active.weak_walk
propagate_two_level = _active.propagate_two_level


def available_backends():
    """Mapping of backend name to module, for benchmarks and cross-checks."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
