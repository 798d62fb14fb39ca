"""Deterministic grayscale-patch augmentation and multi-modal defense preprocessing.

The package turns person re-identification training corpora into augmented
or defended variants: whole-image and local grayscale patch replacement,
grayscale/sketch channel fusion, and a downscale-upscale resize defense,
all driven by per-image reproducible random streams with a replayable audit
manifest.
"""

from reidaug.buffer import ImageBuffer
from reidaug.codecs import ImageDecodeError, decode_image, encode_image
from reidaug.defense import (
    DefenseConfig,
    DefenseKind,
    DefenseOutcome,
    mmd_apply,
    mmd_classify,
    resize_defense,
)
from reidaug.imagecore import gaussian_blur, gray_to_rgb, resize_bilinear, to_grayscale
from reidaug.pipeline import (
    BatchResult,
    DatasetEntry,
    RunStats,
    TransformRecord,
    apply_transform,
    compute_stats,
    derive_stream,
    process_batch,
    replay_record,
    walk_dataset,
    write_manifest,
)
from reidaug.transforms import (
    AugmentConfig,
    LgprOutcome,
    Rect,
    SketchParams,
    fuse_channels,
    ggpr_gate,
    lgpr,
    sample_rect,
    sketch,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "BatchResult",
    "DatasetEntry",
    "DefenseConfig",
    "DefenseKind",
    "DefenseOutcome",
    "ImageBuffer",
    "ImageDecodeError",
    "LgprOutcome",
    "Rect",
    "RunStats",
    "SketchParams",
    "TransformRecord",
    "apply_transform",
    "compute_stats",
    "decode_image",
    "derive_stream",
    "encode_image",
    "fuse_channels",
    "gaussian_blur",
    "ggpr_gate",
    "gray_to_rgb",
    "lgpr",
    "mmd_apply",
    "mmd_classify",
    "process_batch",
    "replay_record",
    "resize_bilinear",
    "resize_defense",
    "sample_rect",
    "sketch",
    "to_grayscale",
    "walk_dataset",
    "write_manifest",
    "__version__",
]
