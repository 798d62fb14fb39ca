import math

import numpy as np
import pytest

from conftest import luma_reference, make_plane, make_rgb
from reidaug.buffer import ImageBuffer
from reidaug.codecs import ImageDecodeError, decode_image, encode_image
from reidaug.imagecore import gaussian_blur, gray_to_rgb, resize_bilinear, to_grayscale
from reidaug.kernels.support import gaussian_taps
from reidaug.kernels._numpy_impl import _blur_plane_f64


def pixel(r, g, b):
    return ImageBuffer(np.array([[[r, g, b]]], dtype=np.uint8))


class TestToGrayscale:
    @pytest.mark.parametrize(
        "rgb,expected",
        [
            ((255, 255, 255), 255),
            ((0, 0, 0), 0),
            ((255, 0, 0), 76),    # round(0.299*255) = 76.245 -> 76
            ((0, 255, 0), 150),   # round(0.587*255) = 149.685 -> 150
            ((0, 0, 255), 29),    # round(0.114*255) = 29.07 -> 29
        ],
    )
    def test_known_pixels(self, rgb, expected):
        assert to_grayscale(pixel(*rgb)).plane[0, 0] == expected

    def test_matches_scalar_reference(self, rng):
        img = make_rgb(rng, 31, 17)
        out = to_grayscale(img).plane
        for y in range(17):
            for x in range(31):
                r, g, b = (int(v) for v in img.pixels[y, x])
                assert out[y, x] == luma_reference(r, g, b)

    def test_output_within_channel_range(self, rng):
        img = make_rgb(rng, 40, 20)
        out = to_grayscale(img).plane.astype(int)
        lo = img.pixels.min(axis=2).astype(int)
        hi = img.pixels.max(axis=2).astype(int)
        assert (out >= lo - 1).all() and (out <= hi + 1).all()

    def test_idempotent_through_replication(self, rng):
        img = make_rgb(rng, 16, 16)
        once = to_grayscale(img)
        again = to_grayscale(gray_to_rgb(once))
        assert once == again

    def test_rejects_single_channel(self):
        with pytest.raises(ValueError, match="3-channel"):
            to_grayscale(ImageBuffer.full(2, 2, 1, 0))


class TestGrayToRgb:
    def test_replicates_plane(self):
        out = gray_to_rgb(ImageBuffer.full(3, 2, 1, 200))
        assert out.channels == 3
        assert (out.pixels == 200).all()

    def test_zero(self):
        assert gray_to_rgb(ImageBuffer.full(1, 1, 1, 0)) == ImageBuffer.full(1, 1, 3, 0)

    def test_fixed_point_on_equal_channels(self, rng):
        plane = make_plane(rng, 9, 9)
        img = gray_to_rgb(plane)
        assert gray_to_rgb(to_grayscale(img)) == img

    def test_rejects_three_channels(self):
        with pytest.raises(ValueError, match="1-channel"):
            gray_to_rgb(ImageBuffer.full(2, 2, 3, 0))


class TestResizeBilinear:
    def test_constant_preserved(self):
        img = ImageBuffer.full(128, 64, 3, 77)
        for w, h in ((50, 110), (384, 128), (1, 1), (200, 3)):
            out = resize_bilinear(img, w, h)
            assert (out.width, out.height) == (w, h)
            assert (out.pixels == 77).all()

    def test_identity_dimensions_byte_identical(self, rng):
        img = make_rgb(rng, 33, 21)
        assert resize_bilinear(img, 33, 21) == img

    def test_checkerboard_average(self):
        # all four corners blend equally under half-pixel mapping: 127.5 -> 128
        img = ImageBuffer(np.array([[0, 255], [255, 0]], dtype=np.uint8))
        assert resize_bilinear(img, 1, 1).plane[0, 0] == 128

    def test_convexity(self, rng):
        img = make_rgb(rng, 19, 37)
        out = resize_bilinear(img, 50, 13)
        for c in range(3):
            assert int(out.pixels[:, :, c].min()) >= int(img.pixels[:, :, c].min()) - 1
            assert int(out.pixels[:, :, c].max()) <= int(img.pixels[:, :, c].max()) + 1

    def test_rejects_degenerate_target(self):
        img = ImageBuffer.full(4, 4, 3, 0)
        with pytest.raises(ValueError, match="at least 1x1"):
            resize_bilinear(img, 0, 4)
        with pytest.raises(ValueError, match="at least 1x1"):
            resize_bilinear(img, 4, -1)

    def test_single_channel_supported(self, rng):
        out = resize_bilinear(make_plane(rng, 10, 10), 4, 6)
        assert (out.width, out.height, out.channels) == (4, 6, 1)


class TestGaussianBlur:
    def test_constant_plane_exact(self):
        img = ImageBuffer.full(21, 13, 1, 123)
        assert gaussian_blur(img, 2.5) == img

    def test_impulse_matches_brute_force_oracle(self):
        # independent oracle: peak = round(255 * k0^2) for normalized taps
        sigma = 1.0
        radius = math.ceil(3 * sigma)
        offsets = np.arange(-radius, radius + 1, dtype=np.float64)
        weights = np.exp(-(offsets * offsets) / (2 * sigma * sigma))
        taps = weights / weights.sum()

        size = 31
        arr = np.zeros((size, size), dtype=np.uint8)
        arr[size // 2, size // 2] = 255
        out = gaussian_blur(ImageBuffer(arr), sigma).plane

        assert out[size // 2, size // 2] == 41  # floor(255 * k0^2 + 0.5), k0 = 0.39905
        expected = np.zeros((size, size))
        lo, hi = size // 2 - radius, size // 2 + radius
        expected[lo : hi + 1, lo : hi + 1] = 255.0 * np.outer(taps, taps)
        assert (out == np.floor(expected + 0.5).astype(np.uint8)).all()

    def test_kernel_normalization_preserves_total(self):
        # on the pre-quantization separable convolution the impulse's total
        # mass is conserved to within 1 count (it is 255 up to float error);
        # uint8 rounding then loses ~6 counts at sigma=1, so the conservation
        # claim is checked where it holds and the quantized map is pinned to
        # the brute-force oracle above.
        sigma = 1.0
        arr = np.zeros((31, 31), dtype=np.uint8)
        arr[15, 15] = 255
        acc = _blur_plane_f64(arr, gaussian_taps(sigma))
        assert abs(acc.sum() - 255.0) < 1.0
        assert abs(acc.sum() - 255.0) < 1e-9  # actually conserved to float precision

    def test_rejects_bad_sigma_and_channels(self):
        with pytest.raises(ValueError, match="sigma"):
            gaussian_blur(ImageBuffer.full(4, 4, 1, 0), 0.0)
        with pytest.raises(ValueError, match="1-channel"):
            gaussian_blur(ImageBuffer.full(4, 4, 3, 0), 1.0)


class TestCodecs:
    def test_one_by_one_red_png(self):
        img = ImageBuffer(np.array([[[255, 0, 0]]], dtype=np.uint8))
        decoded = decode_image(encode_image(img))
        assert (decoded.width, decoded.height, decoded.channels) == (1, 1, 3)
        assert decoded.tobytes() == bytes([255, 0, 0])

    def test_png_round_trip_random(self, rng):
        img = make_rgb(rng, 64, 128)
        assert decode_image(encode_image(img)) == img

    def test_png_round_trip_single_channel(self, rng):
        img = make_plane(rng, 32, 16)
        assert decode_image(encode_image(img)) == img

    def test_truncated_stream_errors(self, rng):
        data = encode_image(make_rgb(rng, 16, 16))
        with pytest.raises(ImageDecodeError):
            decode_image(data[: len(data) // 2])
        with pytest.raises(ImageDecodeError):
            decode_image(b"not an image at all")

    def test_jpeg_decodes(self, rng):
        import io

        from PIL import Image

        img = make_rgb(rng, 24, 24)
        buf = io.BytesIO()
        Image.fromarray(img.pixels, "RGB").save(buf, format="JPEG")
        decoded = decode_image(buf.getvalue())
        assert (decoded.width, decoded.height, decoded.channels) == (24, 24, 3)

    def test_unsupported_encode_format(self):
        with pytest.raises(ValueError, match="PNG only"):
            encode_image(ImageBuffer.full(2, 2, 3, 0), "jpeg")

    def test_unsupported_decode_format(self, rng):
        import io

        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(make_rgb(rng, 8, 8).pixels, "RGB").save(buf, format="BMP")
        with pytest.raises(ImageDecodeError, match="unsupported"):
            decode_image(buf.getvalue())
