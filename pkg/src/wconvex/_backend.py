"""Select the compiled kernels when available.

Set ``WCONVEX_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _pykernels

python = _pykernels

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("WCONVEX_BACKEND", "").lower() != "python":
    kernels = compiled
    NAME = "cython"
else:
    kernels = _pykernels
    NAME = "python"


def available():
    """Names of the importable backends."""
    return ["python"] + (["cython"] if compiled is not None else [])


def get(name=None):
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
