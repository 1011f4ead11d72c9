"""Select the compiled kernels when importable, the numpy fallback otherwise.

Set ``ONCOVIRUS_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import os

_FORCE_PURE = os.environ.get("ONCOVIRUS_PURE_PYTHON", "") not in ("", "0")


def load(name=None):
    """Return a backend module by name (``"cython"`` or ``"python"``)."""
    if name == "python":
        return importlib.import_module("oncovirus._fallback")
    if name == "cython":
        return importlib.import_module("oncovirus._kernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


if _FORCE_PURE:
    impl = load("python")
    BACKEND = "python"
else:
    try:
        impl = load("cython")
        BACKEND = "cython"
    except ImportError:
        impl = load("python")
        BACKEND = "python"
