"""Stochastic training-time transforms.

Three image-level operations live here: global grayscale replacement (GGPR),
local grayscale patch replacement (LGPR), and sketch conversion, plus the
channel-fusion primitive they share with the defense module. Every stochastic
operation takes an explicit random stream or pre-drawn uniform and reports
exactly what it consumed, so callers can audit and replay each application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from reidaug import kernels
from reidaug.buffer import ImageBuffer
from reidaug.imagecore import gaussian_blur, gray_to_rgb, to_grayscale

CHANNEL_NAMES = ("R", "G", "B")
_CHANNEL_INDEX = {"R": 0, "G": 1, "B": 2}

SKETCH_OPERATORS = ("dodge", "sobel")


@dataclass(frozen=True)
class AugmentConfig:
    """Gate probabilities and rectangle-sampling ranges for GGPR/LGPR.

    ``area_min``/``area_max`` bound the patch area as a fraction of the image;
    ``aspect_min``/``aspect_max`` bound its height/width ratio. Rectangle
    sampling retries up to ``max_attempts`` times before giving up.
    """

    lgpr_prob: float = 0.4
    ggpr_prob: float = 0.05
    area_min: float = 0.02
    area_max: float = 0.4
    aspect_min: float = 0.3
    aspect_max: float = 3.33
    max_attempts: int = 100

    def __post_init__(self) -> None:
        if not 0.0 <= self.lgpr_prob <= 1.0:
            raise ValueError(f"lgpr_prob must be in [0, 1], got {self.lgpr_prob}")
        if not 0.0 <= self.ggpr_prob <= 1.0:
            raise ValueError(f"ggpr_prob must be in [0, 1], got {self.ggpr_prob}")
        if not 0.0 < self.area_min <= self.area_max <= 1.0:
            raise ValueError(
                f"area bounds must satisfy 0 < area_min <= area_max <= 1, "
                f"got ({self.area_min}, {self.area_max})"
            )
        if not 0.0 < self.aspect_min <= self.aspect_max:
            raise ValueError(
                f"aspect bounds must satisfy 0 < aspect_min <= aspect_max, "
                f"got ({self.aspect_min}, {self.aspect_max})"
            )
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be at least 1, got {self.max_attempts}")


@dataclass(frozen=True)
class Rect:
    """An axis-aligned patch; ``x``/``y`` is the top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ValueError(f"rect origin must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rect sides must be at least 1, got {self.w}x{self.h}")

    def fits_within(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class SketchParams:
    """Sketch operator choice: dodge-blend pencil sketch or inverted Sobel."""

    operator: str = "dodge"
    sigma: float = 3.0

    def __post_init__(self) -> None:
        if self.operator not in SKETCH_OPERATORS:
            raise ValueError(f"operator must be one of {SKETCH_OPERATORS}, got {self.operator!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class RectSample:
    """Outcome of one rectangle-sampling run, draws in consumption order."""

    rect: Rect | None
    attempts: int
    draws: tuple[float | int, ...]


@dataclass(frozen=True)
class LgprOutcome:
    """Audit record of one LGPR application."""

    gate: float
    fired: bool
    rect: Rect | None
    attempts: int
    draws: tuple[float | int, ...]


def ggpr_gate(img: ImageBuffer, u: float, prob: float) -> tuple[ImageBuffer, bool]:
    """Convert the whole image to replicated grayscale when ``u < prob``."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must be in [0, 1), got {u}")
    if u < prob:
        return gray_to_rgb(to_grayscale(img)), True
    return img, False


def rect_dims(area: float, ratio: float) -> tuple[int, int]:
    """Patch sides for a target area and height/width ratio, rounded half up."""
    h = int(math.floor(math.sqrt(area * ratio) + 0.5))
    w = int(math.floor(math.sqrt(area / ratio) + 0.5))
    return w, h


def sample_rect_traced(width: int, height: int, cfg: AugmentConfig, rng: np.random.Generator) -> RectSample:
    """Sample a patch rectangle, keeping the full draw trail.

    Each attempt draws, in order: an area fraction, an aspect ratio, and the
    top-left corner. The attempt is accepted when the rectangle has positive
    sides and lies inside the image; after ``cfg.max_attempts`` rejections the
    result carries ``rect=None``.
    """
    if width < 1 or height < 1:
        raise ValueError(f"canvas must be at least 1x1, got {width}x{height}")
    total_area = width * height
    draws: list[float | int] = []
    for attempt in range(1, cfg.max_attempts + 1):
        u_area = float(rng.random())
        u_aspect = float(rng.random())
        x = int(rng.integers(0, width))
        y = int(rng.integers(0, height))
        draws += [u_area, u_aspect, x, y]
        area = (cfg.area_min + u_area * (cfg.area_max - cfg.area_min)) * total_area
        ratio = cfg.aspect_min + u_aspect * (cfg.aspect_max - cfg.aspect_min)
        w, h = rect_dims(area, ratio)
        if w >= 1 and h >= 1 and x + w <= width and y + h <= height:
            return RectSample(Rect(x, y, w, h), attempt, tuple(draws))
    return RectSample(None, cfg.max_attempts, tuple(draws))


def sample_rect(width: int, height: int, cfg: AugmentConfig, rng: np.random.Generator) -> Rect | None:
    """Like :func:`sample_rect_traced` but returning only the rectangle."""
    return sample_rect_traced(width, height, cfg, rng).rect


def grayscale_rect(img: ImageBuffer, rect: Rect) -> ImageBuffer:
    """Replace all three channels inside ``rect`` with the pixel's luma."""
    if img.channels != 3:
        raise ValueError(f"grayscale_rect expects a 3-channel image, got {img.channels}")
    if not rect.fits_within(img.width, img.height):
        raise ValueError(f"rect {rect.as_tuple()} exceeds image {img.width}x{img.height}")
    patched = kernels.replace_rect_with_luma(img.pixels, rect.x, rect.y, rect.w, rect.h)
    return ImageBuffer(patched, copy=False)


def lgpr(img: ImageBuffer, cfg: AugmentConfig, rng: np.random.Generator) -> tuple[ImageBuffer, LgprOutcome]:
    """Local grayscale patch replacement.

    Draws the gate uniform first; when it clears ``cfg.lgpr_prob`` the image
    passes through untouched. Otherwise a rectangle is sampled and its pixels
    are replaced by their luma in all three channels, leaving everything
    outside byte-identical. A failed sampling run also passes through.
    """
    if img.channels != 3:
        raise ValueError(f"lgpr expects a 3-channel image, got {img.channels}")
    gate = float(rng.random())
    if gate >= cfg.lgpr_prob:
        return img, LgprOutcome(gate=gate, fired=False, rect=None, attempts=0, draws=())
    sample = sample_rect_traced(img.width, img.height, cfg, rng)
    if sample.rect is None:
        return img, LgprOutcome(gate=gate, fired=True, rect=None,
                                attempts=sample.attempts, draws=sample.draws)
    return grayscale_rect(img, sample.rect), LgprOutcome(
        gate=gate, fired=True, rect=sample.rect, attempts=sample.attempts, draws=sample.draws
    )


def sketch(img: ImageBuffer, params: SketchParams = SketchParams()) -> ImageBuffer:
    """Render an RGB image as a single-channel sketch.

    The default dodge operator divides the luma by a blurred inverse of
    itself, which saturates flat regions to white and keeps dark responses
    only where local detail exists. The sobel operator inverts the clamped
    gradient magnitude instead.
    """
    if img.channels != 3:
        raise ValueError(f"sketch expects a 3-channel image, got {img.channels}")
    gray = to_grayscale(img)
    if params.operator == "sobel":
        return ImageBuffer(kernels.sobel_inverse(gray.plane), copy=False)
    inverted = ImageBuffer(255 - gray.plane, copy=False)
    blurred = gaussian_blur(inverted, params.sigma)
    return ImageBuffer(kernels.dodge_blend(gray.plane, blurred.plane), copy=False)


def normalize_channels(channels) -> tuple[str, ...]:
    """Canonicalize a channel subset to a sorted tuple of unique letters."""
    letters = list(channels)
    normalized = []
    for ch in letters:
        name = str(ch).upper()
        if name not in _CHANNEL_INDEX:
            raise ValueError(f"unknown channel {ch!r}; use R, G or B")
        normalized.append(name)
    unique = sorted(set(normalized), key=_CHANNEL_INDEX.__getitem__)
    if len(unique) != len(normalized):
        raise ValueError(f"duplicate channels in {channels!r}")
    if not 1 <= len(unique) <= 2:
        raise ValueError(f"channel subset must have size 1 or 2, got {len(unique)}")
    return tuple(unique)


def fuse_channels(rgb: ImageBuffer, plane: ImageBuffer, channels) -> ImageBuffer:
    """Overwrite one or two RGB channels with a single-channel plane."""
    if rgb.channels != 3:
        raise ValueError(f"fuse_channels expects a 3-channel image, got {rgb.channels}")
    if plane.channels != 1:
        raise ValueError(f"fuse_channels expects a 1-channel plane, got {plane.channels}")
    if (plane.width, plane.height) != (rgb.width, rgb.height):
        raise ValueError(
            f"plane {plane.width}x{plane.height} does not match image {rgb.width}x{rgb.height}"
        )
    subset = normalize_channels(channels)
    out = rgb.to_array()
    for name in subset:
        out[:, :, _CHANNEL_INDEX[name]] = plane.plane
    return ImageBuffer(out, copy=False)
