"""In-process array bindings for training loops.

Thin wrappers exposing the reidaug transforms directly on contiguous
``H x W x 3`` uint8 arrays, with explicit ``(seed, ordinal)`` randomness per
call instead of hidden generator state. Outputs for a given ``(seed,
ordinal)`` are byte-identical to what the ``reidaug`` CLI writes for the
same image, parameters and ordinal, so a training loop and a file-based run
can be cross-checked record for record. Vary ``seed`` per epoch (for
example ``seed=epoch``) for fresh yet replayable augmentation.

Input arrays are never mutated: contiguous uint8 arrays are wrapped
zero-copy, anything else is copied first, and every result is a freshly
allocated array. The compiled pixel kernels release the GIL, so independent
``(seed, ordinal)`` calls can run concurrently from multiple host threads.
"""

from __future__ import annotations

import numpy as np

from reidaug import imagecore as _imagecore
from reidaug import transforms as _transforms
from reidaug.buffer import ImageBuffer
from reidaug.defense import DefenseConfig
from reidaug.pipeline import MODES, apply_transform, derive_stream
from reidaug.transforms import AugmentConfig, SketchParams

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "DefenseConfig",
    "SketchParams",
    "MODES",
    "derive_stream",
    "ggpr_gate",
    "lgpr",
    "mmd_apply",
    "resize_defense",
    "sketch",
    "to_grayscale",
    "transform",
    "__version__",
]


def _as_buffer(array, field: str = "array") -> ImageBuffer:
    if not isinstance(array, np.ndarray):
        raise TypeError(f"{field} must be a numpy.ndarray, got {type(array).__name__}")
    if array.dtype != np.uint8:
        raise TypeError(f"{field} must have dtype uint8, got {array.dtype}")
    if array.ndim == 2 or (array.ndim == 3 and array.shape[2] in (1, 3)):
        try:
            return ImageBuffer(array, copy=False)
        except ValueError as exc:
            raise ValueError(f"{field}: {exc}") from exc
    raise ValueError(f"{field} must have shape (H, W, 3), (H, W, 1) or (H, W), got {array.shape}")


def transform(
    array: np.ndarray,
    mode: str,
    *,
    seed: int = 0,
    ordinal: int = 0,
    augment: AugmentConfig | None = None,
    defense: DefenseConfig | None = None,
) -> tuple[np.ndarray, dict]:
    """Apply one pipeline mode to an array; returns (new array, audit record).

    ``mode`` is one of ``ggpr``, ``lgpr``, ``combined``, ``mmd`` or
    ``resize_defense``. The record mirrors the pipeline's per-image manifest
    entry outcome for the same ``(seed, ordinal)``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    img = _as_buffer(array)
    if img.channels == 1 and mode != "resize_defense":
        img = _imagecore.gray_to_rgb(img)
    rng = derive_stream(seed, ordinal)
    out, outcome = apply_transform(
        img,
        mode,
        augment if augment is not None else AugmentConfig(),
        defense if defense is not None else DefenseConfig(),
        rng,
    )
    return out.to_array(), outcome


def to_grayscale(array: np.ndarray) -> np.ndarray:
    """BT.601 luma plane of an (H, W, 3) uint8 array."""
    return _imagecore.to_grayscale(_as_buffer(array)).plane.copy()


def sketch(array: np.ndarray, operator: str = "dodge", sigma: float = 3.0) -> np.ndarray:
    """Single-channel sketch rendition of an (H, W, 3) uint8 array."""
    params = SketchParams(operator=operator, sigma=sigma)
    return _transforms.sketch(_as_buffer(array), params).plane.copy()


def ggpr_gate(
    array: np.ndarray,
    *,
    seed: int = 0,
    ordinal: int = 0,
    augment: AugmentConfig | None = None,
) -> tuple[np.ndarray, dict]:
    """Whole-image grayscale gate with per-call (seed, ordinal) randomness."""
    return transform(array, "ggpr", seed=seed, ordinal=ordinal, augment=augment)


def lgpr(
    array: np.ndarray,
    *,
    seed: int = 0,
    ordinal: int = 0,
    augment: AugmentConfig | None = None,
) -> tuple[np.ndarray, dict]:
    """Local grayscale patch replacement with per-call randomness."""
    return transform(array, "lgpr", seed=seed, ordinal=ordinal, augment=augment)


def mmd_apply(
    array: np.ndarray,
    *,
    seed: int = 0,
    ordinal: int = 0,
    defense: DefenseConfig | None = None,
) -> tuple[np.ndarray, dict]:
    """Multi-modal defense partition with per-call randomness."""
    return transform(array, "mmd", seed=seed, ordinal=ordinal, defense=defense)


def resize_defense(array: np.ndarray, defense: DefenseConfig | None = None) -> np.ndarray:
    """Deterministic downscale-upscale defense; returns only the new array."""
    out, _ = transform(array, "resize_defense", defense=defense)
    return out
