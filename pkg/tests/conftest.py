import numpy as np
import pytest

from reidaug.buffer import ImageBuffer


def make_rgb(rng: np.random.Generator, width: int = 64, height: int = 128) -> ImageBuffer:
    return ImageBuffer(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def make_plane(rng: np.random.Generator, width: int = 64, height: int = 128) -> ImageBuffer:
    return ImageBuffer(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def luma_reference(r: int, g: int, b: int) -> int:
    """Scalar brute-force BT.601 luma with exact round-half-up."""
    return (299 * r + 587 * g + 114 * b + 500) // 1000


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
