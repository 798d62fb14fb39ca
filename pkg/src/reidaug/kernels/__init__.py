"""Pixel-kernel backends.

Two interchangeable implementations of the hot per-pixel loops live here: a
compiled Cython extension and a NumPy fallback. The compiled backend is
selected at import when available; set ``REIDAUG_KERNELS=numpy`` or
``REIDAUG_KERNELS=cython`` to force one. Both produce byte-identical output
(see tests/test_kernel_parity.py), so the choice only affects speed.
"""

from __future__ import annotations

import os
from types import ModuleType

from reidaug.kernels import _numpy_impl
from reidaug.kernels.support import gaussian_taps, resize_axis_lut

try:
    from reidaug.kernels import _cykernels
except ImportError:
    _cykernels = None

_BACKENDS = {"numpy": _numpy_impl}
if _cykernels is not None:
    _BACKENDS["cython"] = _cykernels


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str) -> ModuleType:
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable kernel backend {name!r}; available: {available_backends()}"
        ) from None


def _select() -> ModuleType:
    forced = os.environ.get("REIDAUG_KERNELS")
    if forced:
        return get_backend(forced)
    return _BACKENDS.get("cython", _numpy_impl)


_active = _select()

BACKEND = _active.NAME

rgb_to_luma = _active.rgb_to_luma
replace_rect_with_luma = _active.replace_rect_with_luma
resize_bilinear = _active.resize_bilinear
blur_plane = _active.blur_plane
dodge_blend = _active.dodge_blend
sobel_inverse = _active.sobel_inverse

__all__ = [
    "BACKEND",
    "available_backends",
    "get_backend",
    "gaussian_taps",
    "resize_axis_lut",
    "rgb_to_luma",
    "replace_rect_with_luma",
    "resize_bilinear",
    "blur_plane",
    "dodge_blend",
    "sobel_inverse",
]
