"""Integrator backend selection.

The compiled ``_ckernel`` extension is used when it was built; otherwise the
pure-Python ``_pykernel`` takes over.  Set ``JANG_PENROSE_KERNEL=python`` to
force the fallback.
"""

import os

from . import _pykernel

OK = _pykernel.OK
BOUND = _pykernel.BOUND
UNDERFLOW = _pykernel.UNDERFLOW
MAXSTEPS = _pykernel.MAXSTEPS
NONFINITE = _pykernel.NONFINITE

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None


def available():
    names = ["python"]
    if _ckernel is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    name = name or os.environ.get("JANG_PENROSE_KERNEL", "auto")
    if name in ("auto", "compiled") and _ckernel is not None:
        return _ckernel
    if name == "compiled":
        raise ImportError("compiled kernel not built; run `pip install -e .`")
    if name not in ("auto", "python"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return _pykernel


def backend_name(mod=None):
    mod = mod or get_backend()
    return "compiled" if mod is _ckernel and mod is not None else "python"
