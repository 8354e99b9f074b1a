"""Kernel backend selection.

The compiled extension ``oldetect._kernels`` is used when it imports;
otherwise the pure-Python module ``oldetect._fallback`` provides the same
functions. Set ``OLDETECT_BACKEND=python`` to force the fallback.
Both backends consume identical pre-drawn random numbers, so they agree
bit-for-bit on integer outputs (walks, SIR traces, core numbers) and to
floating-point rounding on real-valued ones.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

_active = os.environ.get("OLDETECT_BACKEND", "cython" if _compiled is not None else "python")
if _active not in _BACKENDS:
    _active = "python"


def available() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def name() -> str:
    return _active


def set_backend(backend: str) -> None:
    global _active
    if backend not in _BACKENDS:
        raise ValueError(f"backend {backend!r} not available (have {available()})")
    _active = backend


def kernels(backend: str | None = None):
    return _BACKENDS[backend or _active]
