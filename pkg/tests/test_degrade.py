import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from enhbench.degrade import (
    KernelError,
    checkerboard,
    convolve,
    gaussian_defocus_kernel,
    inject_periodic,
    motion_blur_kernel,
    simulate_interlacing,
    validate_kernel,
)


def brute_force_convolve(img, kernel):
    h, w = img.shape
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2

    def mirror(i, n):
        while i < 0 or i >= n:
            if i < 0:
                i = -i
            if i >= n:
                i = 2 * n - 2 - i
        return i

    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for ky in range(kh):
                for kx in range(kw):
                    acc += img[mirror(y + ky - ph, h), mirror(x + kx - pw, w)] * kernel[
                        kh - 1 - ky, kw - 1 - kx
                    ]
            out[y, x] = acc
    return out


class TestMotionKernel:
    def test_length_one_is_identity(self):
        k = motion_blur_kernel(1, 2.34)
        assert k.shape == (1, 1) and k[0, 0] == 1.0

    def test_horizontal_five_tap(self):
        k = motion_blur_kernel(5, 0.0)
        expected = np.zeros((5, 5))
        expected[2] = 0.2
        assert np.allclose(k, expected, atol=1e-12)

    def test_diagonal_moments(self):
        # second moment along the motion axis of the rasterized kernel
        length, theta = 7, math.pi / 4
        k = motion_blur_kernel(length, theta)
        side = k.shape[0]
        c = (side - 1) / 2
        ys, xs = np.mgrid[0:side, 0:side]
        proj = (xs - c) * math.cos(theta) + (ys - c) * math.sin(theta)
        perp = -(xs - c) * math.sin(theta) + (ys - c) * math.cos(theta)
        centroid = float((k * proj).sum())
        second = float((k * (proj - centroid) ** 2).sum())
        assert abs(centroid) < 1e-9
        assert abs(float((k * perp).sum())) < 1e-9
        assert abs(second - (length**2 - 1) / 12.0) < 0.15

    @given(
        st.floats(1.0, 15.0, allow_nan=False),
        st.floats(0.0, math.pi, allow_nan=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_kernel_invariants(self, length, theta):
        k = motion_blur_kernel(length, theta)
        validate_kernel(k)
        assert k.shape[0] >= length

    def test_rejects_short_length(self):
        with pytest.raises(KernelError):
            motion_blur_kernel(0.5, 0.0)


class TestDefocusKernel:
    def test_near_delta(self):
        k = gaussian_defocus_kernel(0.1)
        assert k[k.shape[0] // 2, k.shape[1] // 2] > 0.99

    def test_sigma_one_center_weight(self):
        # independent oracle: normalize the sampled continuous Gaussian
        k = gaussian_defocus_kernel(1.0)
        assert k.shape == (7, 7)
        coords = np.arange(-3, 4)
        g = np.exp(-(coords[:, None] ** 2 + coords[None, :] ** 2) / 2.0)
        assert abs(k[3, 3] - 1.0 / g.sum()) < 1e-12
        assert abs(k[3, 3] - 0.1592) < 0.01

    @given(st.floats(0.2, 4.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_four_fold_symmetry(self, sigma):
        k = gaussian_defocus_kernel(sigma)
        validate_kernel(k)
        assert np.allclose(k, k[::-1]) and np.allclose(k, k[:, ::-1]) and np.allclose(k, k.T)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(KernelError):
            gaussian_defocus_kernel(0.0)


class TestConvolve:
    def test_identity_kernel(self):
        img = np.random.default_rng(0).random((20, 21))
        ident = np.zeros((3, 3))
        ident[1, 1] = 1.0
        assert np.allclose(convolve(img, ident), img, atol=1e-15)

    def test_constant_image_flux(self):
        img = np.full((16, 16), 0.42)
        k = motion_blur_kernel(5, 0.7)
        assert np.allclose(convolve(img, k), 0.42, atol=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        img = rng.random((16, 16))
        k = rng.random((3, 3))
        k /= k.sum()
        assert np.abs(convolve(img, k) - brute_force_convolve(img, k)).max() < 1e-6

    def test_mean_preservation_interior(self):
        # interior-dominated: smooth content keeps the mirror-border
        # reflection error second-order
        ys = np.linspace(0, 6, 256)
        xs = np.linspace(0, 5, 256)
        img = np.clip(0.5 + 0.3 * np.sin(ys)[:, None] * np.cos(xs)[None, :], 0, 1)
        k = gaussian_defocus_kernel(1.5)
        out = convolve(img, k)
        assert abs(out.mean() - img.mean()) < 1e-6

    def test_color_channels_independent(self):
        rng = np.random.default_rng(5)
        img = rng.random((12, 12, 3))
        k = gaussian_defocus_kernel(0.8)
        out = convolve(img, k)
        for c in range(3):
            assert np.allclose(out[:, :, c], convolve(img[:, :, c], k))

    def test_rejects_invalid_kernel(self):
        with pytest.raises(KernelError):
            convolve(np.zeros((8, 8)), np.ones((3, 3)))


class TestInterlacing:
    def test_zero_shift_identity(self):
        img = np.random.default_rng(6).random((10, 16))
        assert np.array_equal(simulate_interlacing(img, 0.0), img)

    def test_integer_shift_moves_edge(self):
        img = np.zeros((8, 32))
        img[:, 16:] = 1.0
        out = simulate_interlacing(img, 2.0)
        assert np.array_equal(out[0::2], img[0::2])
        assert np.all(out[1::2, 18:] == 1.0) and np.all(out[1::2, :16] == 0.0)

    def test_half_pixel_shift_averages_neighbors(self):
        img = np.random.default_rng(7).random((6, 24))
        out = simulate_interlacing(img, 0.5)
        assert np.allclose(out[1::2, 1:], 0.5 * (img[1::2, :-1] + img[1::2, 1:]))

    def test_integer_shift_invertible_on_interior(self):
        img = np.random.default_rng(8).random((12, 40))
        back = simulate_interlacing(simulate_interlacing(img, 3.0), -3.0)
        assert np.array_equal(back[:, 3:-3], img[:, 3:-3])

    def test_rejects_oversized_shift(self):
        with pytest.raises(ValueError, match="width/4"):
            simulate_interlacing(np.zeros((8, 16)), 5.0)


class TestPeriodic:
    def test_amplitude_bounds(self):
        img = np.full((8, 8), 0.5)
        with pytest.raises(ValueError):
            inject_periodic(img, 2, 0.0)
        with pytest.raises(ValueError):
            inject_periodic(img, 2, 0.6)
        with pytest.raises(ValueError):
            inject_periodic(img, 1.5, 0.1)
        out = inject_periodic(img, 2, 1e-4)
        assert np.abs(out - img).max() <= 1e-4 + 1e-15

    def test_period_two_on_gray(self):
        img = np.full((16, 16), 0.5)
        out = inject_periodic(img, 2, 0.1)
        assert set(np.round(np.unique(out), 10)) == {0.4, 0.6}

    def test_spectrum_peak_at_nyquist(self):
        pattern = checkerboard(32, 32, 2)
        spec = np.abs(np.fft.fft2(pattern))
        peak = np.unravel_index(np.argmax(spec), spec.shape)
        assert peak == (16, 16)  # (1/2, 1/2) cycles per pixel
        img = np.full((32, 32), 0.5)
        out = inject_periodic(img, 2, 0.1)
        spec2 = np.abs(np.fft.fft2(out - out.mean()))
        assert np.unravel_index(np.argmax(spec2), spec2.shape) == (16, 16)


@given(
    arrays(np.float64, (9, 9), elements=st.floats(0.0, 1.0, allow_nan=False)),
)
@settings(max_examples=25, deadline=None)
def test_convolve_random_vs_bruteforce(img):
    k = gaussian_defocus_kernel(0.5)
    reference = np.clip(brute_force_convolve(img, k), 0.0, 1.0)
    assert np.abs(convolve(img, k) - reference).max() < 1e-9
