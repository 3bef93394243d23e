# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: mirrored-border convolution and bilateral filtering.

Must stay semantically identical to ``_fallback``; the test suite runs the
cross-backend equivalence checks.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp


cdef inline Py_ssize_t mirror(Py_ssize_t i, Py_ssize_t n) nogil:
    # Reflect without repeating the edge sample, matching np.pad(mode="reflect").
    if n == 1:
        return 0
    while i < 0 or i >= n:
        if i < 0:
            i = -i
        if i >= n:
            i = 2 * n - 2 - i
    return i


def convolve2d_mirror(image, kernel):
    """True 2D convolution of one channel with mirrored (reflect) borders."""
    cdef double[:, ::1] img = np.ascontiguousarray(image, dtype=np.float64)
    cdef double[:, ::1] ker = np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t kh = ker.shape[0], kw = ker.shape[1]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, ky, kx, sy, sx
    cdef double acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for ky in range(kh):
                    sy = mirror(y + ky - ph, h)
                    for kx in range(kw):
                        sx = mirror(x + kx - pw, w)
                        # flipped kernel -> convolution
                        acc += img[sy, sx] * ker[kh - 1 - ky, kw - 1 - kx]
                out[y, x] = acc
    return out_arr


def bilateral_filter(channels, guide, radius, sigma_spatial, sigma_range):
    """Bilateral smoothing of a (C, H, W) stack guided by a 2D intensity map."""
    cdef double[:, :, ::1] ch = np.ascontiguousarray(channels, dtype=np.float64)
    cdef double[:, ::1] gd = np.ascontiguousarray(guide, dtype=np.float64)
    cdef Py_ssize_t c = ch.shape[0], h = ch.shape[1], w = ch.shape[2]
    cdef Py_ssize_t r = radius
    cdef double inv2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    cdef double inv2sr = 1.0 / (2.0 * sigma_range * sigma_range)

    cdef Py_ssize_t win = 2 * r + 1
    spatial_arr = np.empty((win, win), dtype=np.float64)
    cdef double[:, ::1] spatial = spatial_arr
    cdef Py_ssize_t dy, dx
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            spatial[dy + r, dx + r] = exp(-(dy * dy + dx * dx) * inv2ss)

    out_arr = np.empty((c, h, w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, sy, sx, k
    cdef double wgt, den, diff, g0
    cdef double acc[16]
    if c > 16:
        raise ValueError("bilateral_filter supports at most 16 channels")
    with nogil:
        for y in range(h):
            for x in range(w):
                g0 = gd[y, x]
                den = 0.0
                for k in range(c):
                    acc[k] = 0.0
                for dy in range(-r, r + 1):
                    sy = mirror(y + dy, h)
                    for dx in range(-r, r + 1):
                        sx = mirror(x + dx, w)
                        diff = gd[sy, sx] - g0
                        wgt = spatial[dy + r, dx + r] * exp(-diff * diff * inv2sr)
                        den += wgt
                        for k in range(c):
                            acc[k] += wgt * ch[k, sy, sx]
                for k in range(c):
                    out[k, y, x] = acc[k] / den
    return out_arr
