"""Kernel backend registry: compiled core when built, numpy twin otherwise.

Selection happens at import (compiled preferred) and can be forced with the
NIRSTRESS_BACKEND environment variable ("compiled" or "python") or switched
at runtime with set_backend — results are deterministic per backend, and the
two agree to floating-point accumulation order.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import kernels_py

_BACKENDS = {"python": kernels_py}
try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:
    _DEFAULT = "python"
else:
    _BACKENDS["compiled"] = _core
    _DEFAULT = "compiled"

_forced = os.environ.get("NIRSTRESS_BACKEND")
if _forced is not None and _forced not in _BACKENDS:
    raise ConfigError(
        f"NIRSTRESS_BACKEND={_forced!r} unavailable; choose from "
        f"{sorted(_BACKENDS)}"
    )
_active = _forced or _DEFAULT


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}")
    _active = name


def kernels():
    """The active kernel module."""
    return _BACKENDS[_active]
