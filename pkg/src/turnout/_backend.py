"""Kernel selection.

The compiled kernels are used when the extension was built; setting
``TURNOUT_PURE_PYTHON=1`` forces the numpy fallback.
"""
import importlib
import os

BACKENDS = ("cython", "python")
_MODULES = {"cython": "turnout._ckernels", "python": "turnout._pykernels"}


def load(name):
    """Import the kernel module for backend ``name``; raises ImportError if unavailable."""
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return importlib.import_module(_MODULES[name])


def available():
    names = []
    for name in BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("TURNOUT_PURE_PYTHON", "") not in ("", "0"):
        return "python", load("python")
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


BACKEND, kernels = _select()
