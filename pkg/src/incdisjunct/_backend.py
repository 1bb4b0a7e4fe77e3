"""Kernel backend selection.

The hot loops (violated-set scans, the greedy derandomization fill) have two
interchangeable implementations: numba-compiled kernels and a pure
numpy/Python path. The env var INCDISJUNCT_BACKEND picks the default:

    auto   - numba when importable, numpy otherwise (default)
    numba  - require numba, error if missing
    numpy  - force the fallback path

Both paths perform the same floating-point operations in the same order, so
outputs are bit-identical; the tests assert this.
"""

import os
import warnings

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

_CHOICES = ("auto", "numba", "numpy")


def _from_env():
    raw = os.environ.get("INCDISJUNCT_BACKEND", "auto").strip().lower() or "auto"
    if raw not in _CHOICES:
        warnings.warn(
            f"INCDISJUNCT_BACKEND={raw!r} not in {_CHOICES}; using 'auto'",
            RuntimeWarning,
        )
        raw = "auto"
    if raw == "numba" and not HAVE_NUMBA:
        raise ImportError("INCDISJUNCT_BACKEND=numba but numba is not installed")
    if raw == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    return raw


_active = _from_env()


def active_backend() -> str:
    """Name of the backend currently in use: 'numba' or 'numpy'."""
    return _active


def set_backend(name: str) -> str:
    """Switch backends at runtime (used by tests and the benchmark).

    Returns the previously active backend.
    """
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    previous = _active
    _active = name
    return previous
