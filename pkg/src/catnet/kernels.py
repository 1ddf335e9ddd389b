"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``CATNET_PURE_PYTHON`` is set to a non-empty value, the numpy fallback is.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("CATNET_PURE_PYTHON") or _ckernels is None:
    default = _pykernels
else:
    default = _ckernels

BACKEND: str = default.NAME


def available() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return default
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {available()}") from None
