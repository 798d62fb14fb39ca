#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py [--size WxH] [--repeats N]

Both backends produce byte-identical output (verified here as a side effect),
so the numbers are a pure speed comparison of the hot per-pixel loops.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from reidaug import kernels
from reidaug.kernels.support import gaussian_taps, resize_axis_lut


def parse_size(value: str) -> tuple[int, int]:
    w, h = value.lower().split("x")
    return int(w), int(h)


def time_call(fn, repeats: int) -> float:
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def build_cases(width: int, height: int):
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    plane = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    other = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    taps = gaussian_taps(3.0)
    up_w, up_h = width * 3, height * 3
    x_lut = resize_axis_lut(width, up_w)
    y_lut = resize_axis_lut(height, up_h)
    rect = (width // 4, height // 4, width // 2, height // 2)
    return [
        ("rgb_to_luma", lambda be: be.rgb_to_luma(rgb)),
        ("replace_rect_with_luma", lambda be: be.replace_rect_with_luma(rgb, *rect)),
        ("resize_bilinear_3x", lambda be: be.resize_bilinear(rgb, *x_lut, *y_lut)),
        ("gaussian_blur_s3", lambda be: be.blur_plane(plane, taps)),
        ("dodge_blend", lambda be: be.dodge_blend(plane, other)),
        ("sobel_inverse", lambda be: be.sobel_inverse(plane)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=parse_size, default=(64, 128),
                        help="image WIDTHxHEIGHT (default 64x128)")
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    width, height = args.size
    available = kernels.available_backends()
    print(f"image {width}x{height}, {args.repeats} repeats, backends: {', '.join(available)}")
    if "cython" not in available:
        print("compiled backend not built; run `pip install -e .` with a C compiler")
        return

    np_backend = kernels.get_backend("numpy")
    cy_backend = kernels.get_backend("cython")
    header = f"{'kernel':<24}{'numpy':>12}{'cython':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call in build_cases(width, height):
        out_np = call(np_backend)
        out_cy = call(cy_backend)
        if not (np.asarray(out_np) == np.asarray(out_cy)).all():
            raise AssertionError(f"{name}: backend outputs differ")
        t_np = time_call(lambda: call(np_backend), args.repeats)
        t_cy = time_call(lambda: call(cy_backend), args.repeats)
        print(f"{name:<24}{t_np * 1e3:>10.3f}ms{t_cy * 1e3:>10.3f}ms{t_np / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
