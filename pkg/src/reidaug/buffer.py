"""Value-semantic 8-bit image buffers shared by every transform."""

from __future__ import annotations

import numpy as np

_VALID_CHANNELS = (1, 3)


class ImageBuffer:
    """An immutable ``height x width x channels`` raster of 8-bit samples.

    Samples are stored row-major and interleaved (C-contiguous uint8).
    ``channels`` is 3 for RGB and 1 for a luma or sketch plane. Instances
    behave as values: the backing array is read-only, equality compares
    dimensions plus raw bytes, and every transform returns a new buffer.
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray, *, copy: bool = True):
        arr = np.asarray(pixels)
        if arr.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {arr.dtype}")
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"pixels must be HxW or HxWxC, got shape {arr.shape}")
        height, width, channels = arr.shape
        if width < 1 or height < 1:
            raise ValueError(f"image dimensions must be at least 1x1, got {width}x{height}")
        if channels not in _VALID_CHANNELS:
            raise ValueError(f"channels must be 1 or 3, got {channels}")
        if copy:
            arr = np.ascontiguousarray(arr).copy()
        else:
            arr = np.ascontiguousarray(arr).view()
        arr.flags.writeable = False
        self._pixels = arr

    @classmethod
    def full(cls, width: int, height: int, channels: int, value: int = 0) -> "ImageBuffer":
        """A constant-valued buffer, mostly useful in tests and fixtures."""
        if channels not in _VALID_CHANNELS:
            raise ValueError(f"channels must be 1 or 3, got {channels}")
        arr = np.full((height, width, channels), value, dtype=np.uint8)
        return cls(arr, copy=False)

    @classmethod
    def from_flat(cls, width: int, height: int, channels: int, data: bytes) -> "ImageBuffer":
        """Build a buffer from raw interleaved row-major bytes."""
        expected = width * height * channels
        if len(data) != expected:
            raise ValueError(
                f"data length {len(data)} does not match {width}x{height}x{channels} = {expected}"
            )
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels)
        return cls(arr)

    @property
    def pixels(self) -> np.ndarray:
        """Read-only ``(height, width, channels)`` uint8 view."""
        return self._pixels

    @property
    def plane(self) -> np.ndarray:
        """Read-only 2-D view of a single-channel buffer."""
        if self.channels != 1:
            raise ValueError("plane requires a 1-channel buffer")
        return self._pixels[:, :, 0]

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def channels(self) -> int:
        return self._pixels.shape[2]

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()

    def to_array(self) -> np.ndarray:
        """A fresh writable copy of the pixel data."""
        return self._pixels.copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and self.tobytes() == other.tobytes()

    __hash__ = None  # mutable-sized payload; not meant for dict keys

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}, channels={self.channels})"
