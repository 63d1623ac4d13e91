"""Backend selection for the hot kernels.

``SPIKEBASIS_BACKEND=numpy`` forces the pure-numpy path; the default is
``numba`` when it imports cleanly.
"""

import os

BACKENDS = ("numba", "numpy")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None


def _select_backend():
    requested = os.environ.get("SPIKEBASIS_BACKEND", "").strip().lower()
    if requested == "numpy" or not HAVE_NUMBA:
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(
            f"SPIKEBASIS_BACKEND must be one of {BACKENDS}, got {requested!r}"
        )
    return "numba"


BACKEND = _select_backend()


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or a no-op when numba is absent."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def resolve_backend(backend=None):
    if backend is None:
        return BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
