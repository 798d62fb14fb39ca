"""Shared kernel-independent precomputations.

Both backends receive identical tap weights and index/fraction tables from
here, so backend parity only depends on the per-pixel arithmetic.
"""

from __future__ import annotations

import math

import numpy as np


def gaussian_taps(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian weights with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def resize_axis_lut(in_size: int, out_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-center sample positions for one axis.

    Returns (lo, hi, frac): integer neighbour indices plus the interpolation
    fraction, with source coordinates clamped to the valid range so border
    samples replicate the edge.
    """
    scale = in_size / out_size
    pos = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    np.clip(pos, 0.0, float(in_size - 1), out=pos)
    lo_f = np.floor(pos)
    frac = pos - lo_f
    lo = lo_f.astype(np.intp)
    hi = np.minimum(lo + 1, in_size - 1)
    return lo, hi, frac
