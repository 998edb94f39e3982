"""Backend selection for the transfer-matrix kernels.

The compiled extension is used when it imports; otherwise the NumPy
implementation. :func:`use_backend` switches at runtime (tests, benchmarks).
"""

from __future__ import annotations

import logging
from types import ModuleType

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _kernels_ext
except ImportError:  # extension not built
    _kernels_ext = None
    log.debug("compiled kernels unavailable, using NumPy fallback")

_BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _kernels_ext is not None:
    _BACKENDS["cython"] = _kernels_ext

_active: ModuleType = _BACKENDS.get("cython", _kernels_py)


def available_backends() -> list[str]:
    return list(_BACKENDS)


def backend_name() -> str:
    return "cython" if _active is _kernels_ext and _kernels_ext is not None else "python"


def use_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}") from None


def chain_product(b, gaps):
    return _active.chain_product(b, gaps)


def mirror_response(m, kx):
    return _active.mirror_response(m, kx)
