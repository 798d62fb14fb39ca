"""Pixel-level primitives every transform is built from.

All functions are pure: they validate their inputs, never mutate them, and
return fresh :class:`~reidaug.buffer.ImageBuffer` values. Conventions fixed
here and relied on everywhere else:

* grayscale uses BT.601 luma weights (0.299, 0.587, 0.114), rounded half up;
* resizing is bilinear with half-pixel-center coordinate mapping;
* blurring is a separable Gaussian with radius ceil(3*sigma) and
  clamp-to-border edge handling.
"""

from __future__ import annotations

import numpy as np

from reidaug import kernels
from reidaug.buffer import ImageBuffer
from reidaug.kernels.support import gaussian_taps, resize_axis_lut


def _require_channels(img: ImageBuffer, channels: int, op: str) -> None:
    if img.channels != channels:
        raise ValueError(f"{op} expects a {channels}-channel image, got {img.channels} channels")


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Collapse an RGB buffer to a single luma plane.

    Each output sample is ``round(0.299 R + 0.587 G + 0.114 B)`` with ties
    rounded up, computed exactly in integer arithmetic.
    """
    _require_channels(img, 3, "to_grayscale")
    return ImageBuffer(kernels.rgb_to_luma(img.pixels), copy=False)


def gray_to_rgb(img: ImageBuffer) -> ImageBuffer:
    """Replicate a single plane into all three RGB channels."""
    _require_channels(img, 1, "gray_to_rgb")
    return ImageBuffer(np.repeat(img.pixels, 3, axis=2), copy=False)


def resize_bilinear(img: ImageBuffer, out_w: int, out_h: int) -> ImageBuffer:
    """Resample to ``out_w x out_h`` with bilinear interpolation.

    Sample coordinates map through half-pixel centers and are clamped at the
    borders; values are rounded half up once at the end. Resizing to the
    current dimensions returns a byte-identical copy.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be at least 1x1, got {out_w}x{out_h}")
    if out_w == img.width and out_h == img.height:
        return ImageBuffer(img.pixels)
    x_lo, x_hi, x_frac = resize_axis_lut(img.width, out_w)
    y_lo, y_hi, y_frac = resize_axis_lut(img.height, out_h)
    resized = kernels.resize_bilinear(img.pixels, x_lo, x_hi, x_frac, y_lo, y_hi, y_frac)
    return ImageBuffer(resized, copy=False)


def gaussian_blur(img: ImageBuffer, sigma: float) -> ImageBuffer:
    """Separable Gaussian blur of a single-channel buffer.

    Kernel radius is ceil(3*sigma); borders replicate the edge sample. The
    two passes run in float64 and quantize once, so a constant plane comes
    back exactly constant.
    """
    _require_channels(img, 1, "gaussian_blur")
    taps = gaussian_taps(sigma)
    return ImageBuffer(kernels.blur_plane(img.plane, taps), copy=False)
