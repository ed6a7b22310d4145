"""Backend switch for the compiled kernels.

``SMERO_NUMBA=0`` (or an absent numba install) selects the pure-numpy
stepper; anything else uses the ``@njit`` kernels.  ``SMERO_THREADS`` sets
the worker count for lambda sweeps.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_BACKEND = "numba" if numba is not None and os.environ.get("SMERO_NUMBA", "1") != "0" else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend():
    return _BACKEND


def set_backend(name):
    """Switch backends at runtime; returns the previous one."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    prev, _BACKEND = _BACKEND, name
    return prev


def thread_count():
    try:
        return max(1, int(os.environ.get("SMERO_THREADS", "0")) or os.cpu_count() or 1)
    except ValueError:
        return 1
