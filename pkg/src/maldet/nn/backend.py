"""Kernel backend selection.

Hot loops (conv and pooling, forward and backward) exist twice: numba
@njit kernels and a pure-numpy im2col path. The env var MALDET_BACKEND
("numba" or "numpy") picks the default; use_backend() switches in-process,
which the backend benchmark and the equivalence tests rely on. Dense
layers always go through BLAS matmul and are not duplicated here.
"""

from __future__ import annotations

import os

from ..errors import ConfigError

ENV_VAR = "MALDET_BACKEND"
_VALID = ("numba", "numpy")

_backend: str | None = None
_blas_limit_handle = None


def _apply_thread_policy(name: str) -> None:
    """Cap BLAS worker pools to one thread while numba kernels are active.

    OpenBLAS workers spin after each call; interleaved with numba's
    parallel regions (dense layers between conv kernels) they starve the
    prange threads and slow the hot path several-fold on small machines.
    The numpy backend gets the full BLAS pool back.
    """
    global _blas_limit_handle
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    n = 1 if name == "numba" else (os.cpu_count() or 1)
    _blas_limit_handle = threadpool_limits(limits=n, user_api="blas")


def _numba_usable() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def _resolve_default() -> str:
    name = os.environ.get(ENV_VAR, "").strip().lower()
    if name:
        if name not in _VALID:
            raise ConfigError(f"{ENV_VAR} must be one of {_VALID}, got {name!r}")
        if name == "numba" and not _numba_usable():
            raise ConfigError(f"{ENV_VAR}=numba but numba is not importable")
        return name
    return "numba" if _numba_usable() else "numpy"


def backend_name() -> str:
    global _backend
    if _backend is None:
        _backend = _resolve_default()
        _apply_thread_policy(_backend)
    return _backend


def use_backend(name: str) -> str:
    """Select the kernel backend, returning the previously active one."""
    global _backend
    if name not in _VALID:
        raise ConfigError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not _numba_usable():
        raise ConfigError("numba backend requested but numba is not importable")
    prev = backend_name()
    _backend = name
    if name != prev:
        _apply_thread_policy(name)
    return prev


def kernels():
    """Return the active kernel module."""
    if backend_name() == "numba":
        from . import kernels_numba
        return kernels_numba
    from . import kernels_numpy
    return kernels_numpy
