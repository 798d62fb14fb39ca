"""Multi-modal defense partition and the exterior resize defense.

Training-time hardening partitions each input, via a single uniform draw,
into sketch-fusion, grayscale-fusion, pure-grayscale, or pass-through. The
inference-time resize defense squeezes an image through a small intermediate
resolution to break high-frequency structure before the model sees it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from reidaug.buffer import ImageBuffer
from reidaug.imagecore import gray_to_rgb, resize_bilinear, to_grayscale
from reidaug.transforms import SketchParams, fuse_channels, sketch

_SINGLE_SUBSETS = (("R",), ("G",), ("B",))
_PAIR_SUBSETS = (("R", "G"), ("R", "B"), ("G", "B"))


class DefenseKind(enum.Enum):
    PASS_THROUGH = "pass_through"
    PURE_GRAY = "pure_gray"
    GRAY_FUSE = "gray_fuse"
    SKETCH_FUSE = "sketch_fuse"


@dataclass(frozen=True)
class DefenseConfig:
    """Partition probabilities, fusion behaviour, and resize geometry.

    ``gray_prob``, ``gray_fuse_prob`` and ``sketch_fuse_prob`` are the shares
    of inputs converted to pure grayscale, grayscale-fused and sketch-fused;
    the remainder passes through. ``two_channel_prob`` picks a 2-channel
    fusion over a 1-channel one. ``down_*``/``up_*`` define the resize
    defense: squeeze to ``down_w x down_h``, then back up to ``up_w x up_h``.
    """

    gray_prob: float = 0.1
    gray_fuse_prob: float = 0.05
    sketch_fuse_prob: float = 0.05
    two_channel_prob: float = 0.5
    sketch: SketchParams = field(default_factory=SketchParams)
    down_w: int = 110
    down_h: int = 50
    up_w: int = 384
    up_h: int = 128

    def __post_init__(self) -> None:
        for name in ("gray_prob", "gray_fuse_prob", "sketch_fuse_prob"):
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        total = self.gray_prob + self.gray_fuse_prob + self.sketch_fuse_prob
        if total > 1.0:
            raise ValueError(f"partition probabilities sum to {total}, must be at most 1")
        if not 0.0 <= self.two_channel_prob <= 1.0:
            raise ValueError(f"two_channel_prob must be in [0, 1], got {self.two_channel_prob}")
        for name in ("down_w", "down_h", "up_w", "up_h"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not (self.down_w < self.up_w and self.down_h < self.up_h):
            raise ValueError(
                f"resize defense requires genuine downscaling: "
                f"down {self.down_w}x{self.down_h} must be smaller than up {self.up_w}x{self.up_h}"
            )


@dataclass(frozen=True)
class DefenseOutcome:
    """Which branch fired for one image and every uniform it consumed."""

    kind: DefenseKind
    channels: tuple[str, ...] | None
    draws: tuple[float | int, ...]

    def __post_init__(self) -> None:
        fused = self.kind in (DefenseKind.GRAY_FUSE, DefenseKind.SKETCH_FUSE)
        if fused and (self.channels is None or not 1 <= len(self.channels) <= 2):
            raise ValueError(f"{self.kind.value} outcome requires a channel subset of size 1 or 2")
        if not fused and self.channels is not None:
            raise ValueError(f"{self.kind.value} outcome must not carry channels")


def mmd_classify(u: float, cfg: DefenseConfig) -> DefenseKind:
    """Map one uniform draw to a defense branch.

    The unit interval is split, from the left, into sketch-fusion,
    gray-fusion, pure-grayscale and pass-through segments of measure
    ``sketch_fuse_prob``, ``gray_fuse_prob``, ``gray_prob`` and the rest.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must be in [0, 1), got {u}")
    if u < cfg.sketch_fuse_prob:
        return DefenseKind.SKETCH_FUSE
    if u < cfg.sketch_fuse_prob + cfg.gray_fuse_prob:
        return DefenseKind.GRAY_FUSE
    if u < cfg.sketch_fuse_prob + cfg.gray_fuse_prob + cfg.gray_prob:
        return DefenseKind.PURE_GRAY
    return DefenseKind.PASS_THROUGH


def draw_channel_subset(rng: np.random.Generator, two_channel_prob: float) -> tuple[tuple[str, ...], tuple[float | int, ...]]:
    """Pick 1 or 2 fusion channels; returns the subset and the draws used."""
    u_size = float(rng.random())
    idx = int(rng.integers(0, 3))
    subsets = _PAIR_SUBSETS if u_size < two_channel_prob else _SINGLE_SUBSETS
    return subsets[idx], (u_size, idx)


def mmd_apply(img: ImageBuffer, cfg: DefenseConfig, rng: np.random.Generator) -> tuple[ImageBuffer, DefenseOutcome]:
    """Apply the multi-modal defense partition to one image.

    Consumes one classifying uniform, then (for the fusion branches) one
    uniform for the subset size and one integer for the subset itself. The
    returned outcome carries every draw in consumption order.
    """
    if img.channels != 3:
        raise ValueError(f"mmd_apply expects a 3-channel image, got {img.channels}")
    gate = float(rng.random())
    kind = mmd_classify(gate, cfg)
    if kind is DefenseKind.PASS_THROUGH:
        return img, DefenseOutcome(kind, None, (gate,))
    if kind is DefenseKind.PURE_GRAY:
        return gray_to_rgb(to_grayscale(img)), DefenseOutcome(kind, None, (gate,))
    subset, subset_draws = draw_channel_subset(rng, cfg.two_channel_prob)
    if kind is DefenseKind.GRAY_FUSE:
        plane = to_grayscale(img)
    else:
        plane = sketch(img, cfg.sketch)
    fused = fuse_channels(img, plane, subset)
    return fused, DefenseOutcome(kind, subset, (gate, *subset_draws))


def resize_defense(img: ImageBuffer, cfg: DefenseConfig) -> ImageBuffer:
    """Downscale to the defense resolution, then upscale to the model input size."""
    squeezed = resize_bilinear(img, cfg.down_w, cfg.down_h)
    return resize_bilinear(squeezed, cfg.up_w, cfg.up_h)
