"""NumPy implementation of the pixel kernels.

This is the fallback backend used when the compiled extension is not built.
Arithmetic is kept in exact lockstep with the Cython twin: integer ops are
exact by construction, and the float expressions evaluate the same IEEE-754
operations in the same order, so both backends are byte-identical.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma, round half up: (299 R + 587 G + 114 B + 500) // 1000."""
    px = rgb.astype(np.uint32)
    luma = (299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2] + 500) // 1000
    return luma.astype(np.uint8)


def replace_rect_with_luma(rgb: np.ndarray, x: int, y: int, w: int, h: int) -> np.ndarray:
    """Copy the image, overwriting all three channels inside the rect with luma."""
    out = rgb.copy()
    luma = rgb_to_luma(rgb[y : y + h, x : x + w])
    out[y : y + h, x : x + w] = luma[:, :, None]
    return out


def resize_bilinear(
    src: np.ndarray,
    x_lo: np.ndarray,
    x_hi: np.ndarray,
    x_frac: np.ndarray,
    y_lo: np.ndarray,
    y_hi: np.ndarray,
    y_frac: np.ndarray,
) -> np.ndarray:
    """Bilinear gather/blend with precomputed per-axis tables, round half up."""
    img = src.astype(np.float64)
    row_lo = img[y_lo]
    row_hi = img[y_hi]
    v00 = row_lo[:, x_lo]
    v01 = row_lo[:, x_hi]
    v10 = row_hi[:, x_lo]
    v11 = row_hi[:, x_hi]
    fx = x_frac[None, :, None]
    fy = y_frac[:, None, None]
    top = (1.0 - fx) * v00 + fx * v01
    bot = (1.0 - fx) * v10 + fx * v11
    val = (1.0 - fy) * top + fy * bot
    return np.floor(val + 0.5).astype(np.uint8)


def blur_plane(plane: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable convolution with clamp-to-border, quantized once at the end."""
    acc = _blur_plane_f64(plane, taps)
    return np.floor(acc + 0.5).astype(np.uint8)


def _blur_plane_f64(plane: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # Exposed for the normalization oracle in the tests; not part of the
    # backend interface.
    h, w = plane.shape
    radius = (taps.size - 1) // 2
    src = plane.astype(np.float64)
    cols = np.arange(w)
    tmp = np.zeros((h, w), dtype=np.float64)
    for k in range(taps.size):
        idx = np.clip(cols + (k - radius), 0, w - 1)
        tmp += taps[k] * src[:, idx]
    rows = np.arange(h)
    acc = np.zeros((h, w), dtype=np.float64)
    for k in range(taps.size):
        idx = np.clip(rows + (k - radius), 0, h - 1)
        acc += taps[k] * tmp[idx, :]
    return acc


def dodge_blend(gray: np.ndarray, blurred: np.ndarray) -> np.ndarray:
    """Color-dodge: 255 where blurred saturates, else min(255, g*255 // (255-b))."""
    g = gray.astype(np.uint32)
    b = blurred.astype(np.uint32)
    den = 255 - b
    ratio = (g * 255) // np.maximum(den, 1)
    out = np.where(b == 255, 255, np.minimum(ratio, 255))
    return out.astype(np.uint8)


def sobel_inverse(plane: np.ndarray) -> np.ndarray:
    """255 minus the clamped, rounded Sobel gradient magnitude."""
    h, w = plane.shape
    p = plane.astype(np.int64)
    rows = np.arange(h)
    cols = np.arange(w)

    def shifted(dy: int, dx: int) -> np.ndarray:
        yi = np.clip(rows + dy, 0, h - 1)
        xi = np.clip(cols + dx, 0, w - 1)
        return p[yi][:, xi]

    gx = (shifted(-1, 1) + 2 * shifted(0, 1) + shifted(1, 1)) - (
        shifted(-1, -1) + 2 * shifted(0, -1) + shifted(1, -1)
    )
    gy = (shifted(1, -1) + 2 * shifted(1, 0) + shifted(1, 1)) - (
        shifted(-1, -1) + 2 * shifted(-1, 0) + shifted(-1, 1)
    )
    mag = np.sqrt((gx * gx + gy * gy).astype(np.float64))
    clamped = np.minimum(np.floor(mag + 0.5), 255.0)
    return (255.0 - clamped).astype(np.uint8)
