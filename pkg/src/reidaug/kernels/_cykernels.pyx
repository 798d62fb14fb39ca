# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled pixel kernels.

Arithmetic mirrors reidaug.kernels._numpy_impl operation for operation;
compiled with -ffp-contract=off so float results stay byte-identical to the
NumPy backend.
"""

from libc.math cimport floor, sqrt

import numpy as np

NAME = "cython"

ctypedef unsigned char u8


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def rgb_to_luma(const u8[:, :, ::1] rgb):
    cdef Py_ssize_t h = rgb.shape[0], w = rgb.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef u8[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef unsigned int acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 299u * rgb[y, x, 0] + 587u * rgb[y, x, 1] + 114u * rgb[y, x, 2] + 500u
                out[y, x] = <u8>(acc // 1000u)
    return out_arr


def replace_rect_with_luma(const u8[:, :, ::1] rgb, Py_ssize_t x, Py_ssize_t y,
                           Py_ssize_t w, Py_ssize_t h):
    out_arr = np.asarray(rgb).copy()
    cdef u8[:, :, ::1] out = out_arr
    cdef Py_ssize_t yy, xx
    cdef unsigned int acc
    cdef u8 luma
    with nogil:
        for yy in range(y, y + h):
            for xx in range(x, x + w):
                acc = 299u * out[yy, xx, 0] + 587u * out[yy, xx, 1] + 114u * out[yy, xx, 2] + 500u
                luma = <u8>(acc // 1000u)
                out[yy, xx, 0] = luma
                out[yy, xx, 1] = luma
                out[yy, xx, 2] = luma
    return out_arr


def resize_bilinear(const u8[:, :, ::1] src,
                    const Py_ssize_t[::1] x_lo, const Py_ssize_t[::1] x_hi,
                    const double[::1] x_frac,
                    const Py_ssize_t[::1] y_lo, const Py_ssize_t[::1] y_hi,
                    const double[::1] y_frac):
    cdef Py_ssize_t oh = y_lo.shape[0], ow = x_lo.shape[0], nc = src.shape[2]
    out_arr = np.empty((oh, ow, nc), dtype=np.uint8)
    cdef u8[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, c, ylo, yhi, xlo, xhi
    cdef double fy, fx, top, bot, val
    with nogil:
        for i in range(oh):
            ylo = y_lo[i]
            yhi = y_hi[i]
            fy = y_frac[i]
            for j in range(ow):
                xlo = x_lo[j]
                xhi = x_hi[j]
                fx = x_frac[j]
                for c in range(nc):
                    top = (1.0 - fx) * <double>src[ylo, xlo, c] + fx * <double>src[ylo, xhi, c]
                    bot = (1.0 - fx) * <double>src[yhi, xlo, c] + fx * <double>src[yhi, xhi, c]
                    val = (1.0 - fy) * top + fy * bot
                    out[i, j, c] = <u8>(<int>floor(val + 0.5))
    return out_arr


def blur_plane(const u8[:, ::1] plane, const double[::1] taps):
    cdef Py_ssize_t h = plane.shape[0], w = plane.shape[1]
    cdef Py_ssize_t n = taps.shape[0], radius = (n - 1) // 2
    tmp_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] tmp = tmp_arr
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef u8[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, k
    cdef double acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for k in range(n):
                    acc = acc + taps[k] * <double>plane[y, _clampi(x + k - radius, 0, w - 1)]
                tmp[y, x] = acc
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for k in range(n):
                    acc = acc + taps[k] * tmp[_clampi(y + k - radius, 0, h - 1), x]
                out[y, x] = <u8>(<int>floor(acc + 0.5))
    return out_arr


def dodge_blend(const u8[:, ::1] gray, const u8[:, ::1] blurred):
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef u8[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef unsigned int b, q
    with nogil:
        for y in range(h):
            for x in range(w):
                b = blurred[y, x]
                if b == 255u:
                    out[y, x] = 255u
                else:
                    q = (<unsigned int>gray[y, x] * 255u) // (255u - b)
                    out[y, x] = 255u if q > 255u else <u8>q
    return out_arr


def sobel_inverse(const u8[:, ::1] plane):
    cdef Py_ssize_t h = plane.shape[0], w = plane.shape[1]
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef u8[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, ym, yp, xm, xp
    cdef long gx, gy, m
    cdef double mag
    with nogil:
        for y in range(h):
            ym = _clampi(y - 1, 0, h - 1)
            yp = _clampi(y + 1, 0, h - 1)
            for x in range(w):
                xm = _clampi(x - 1, 0, w - 1)
                xp = _clampi(x + 1, 0, w - 1)
                gx = (<long>plane[ym, xp] + 2 * <long>plane[y, xp] + <long>plane[yp, xp]) - \
                     (<long>plane[ym, xm] + 2 * <long>plane[y, xm] + <long>plane[yp, xm])
                gy = (<long>plane[yp, xm] + 2 * <long>plane[yp, x] + <long>plane[yp, xp]) - \
                     (<long>plane[ym, xm] + 2 * <long>plane[ym, x] + <long>plane[ym, xp])
                mag = sqrt(<double>(gx * gx + gy * gy))
                m = <long>floor(mag + 0.5)
                if m > 255:
                    m = 255
                out[y, x] = <u8>(255 - m)
    return out_arr
