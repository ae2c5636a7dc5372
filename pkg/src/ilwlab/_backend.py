"""Pick the compiled kernel module if it imports, else the numpy fallback.

Set ``ILWLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

kernels = _kernels_py
NAME = "python"

if os.environ.get("ILWLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        NAME = "cython"


def use(name):
    """Switch backends at runtime ("cython" or "python"); returns the previous name."""
    global kernels, NAME
    previous = NAME
    if name == "python":
        kernels, NAME = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels as _compiled

        kernels, NAME = _compiled, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
