"""Optional numba acceleration.

Hot loops are written once as plain Python over numpy arrays and compiled
with :func:`numba.njit` unless the environment variable
``EBRES_DISABLE_NUMBA`` is set to a truthy value, in which case callers
take their vectorised numpy path instead.
"""
import os

__all__ = ["NUMBA_ENABLED", "njit", "numba_enabled"]

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled():
    return os.environ.get("EBRES_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    _numba = None

NUMBA_ENABLED = _numba is not None and not _env_disabled()


def numba_enabled():
    """Return True when compiled kernels are in use."""
    return NUMBA_ENABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)
