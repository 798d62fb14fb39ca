"""Byte-level image decoding and encoding.

Decoding accepts PNG and JPEG. Encoding is deliberately PNG-only: transformed
output must round-trip losslessly so manifests can make exact pixel claims.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from reidaug.buffer import ImageBuffer

_DECODE_FORMATS = {"PNG", "JPEG"}


class ImageDecodeError(ValueError):
    """Raised for malformed bytes or unsupported input formats."""


def decode_image(data: bytes) -> ImageBuffer:
    """Decode PNG or JPEG bytes.

    Single-channel (mode L) sources stay single-channel; everything else is
    converted to RGB.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in _DECODE_FORMATS:
                raise ImageDecodeError(f"unsupported input format {im.format!r}")
            if im.mode == "L":
                arr = np.asarray(im)
            else:
                arr = np.asarray(im.convert("RGB"))
    except ImageDecodeError:
        raise
    except Exception as exc:
        raise ImageDecodeError(f"could not decode image bytes: {exc}") from exc
    return ImageBuffer(arr)


def encode_image(img: ImageBuffer, format: str = "png") -> bytes:
    """Encode to PNG bytes; decode(encode(img)) is byte-identical in data."""
    if format.lower() != "png":
        raise ValueError(f"unsupported output format {format!r}; transformed output is PNG only")
    if img.channels == 1:
        pil = Image.fromarray(img.plane, mode="L")
    else:
        pil = Image.fromarray(img.pixels, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()
