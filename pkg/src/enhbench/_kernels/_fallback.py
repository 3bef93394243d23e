"""Pure-NumPy implementations of the hot kernels.

Semantics match the compiled ``_core`` module; results may differ in the
last few ulps because the summation order is not identical.
"""

import numpy as np


def convolve2d_mirror(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2D convolution of one channel with mirrored (reflect) borders.

    The kernel is flipped, i.e. this is convolution, not correlation.
    Output has the same shape as ``image``; no value clamping is applied.
    """
    image = np.ascontiguousarray(image, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(image, ((ph, ph), (pw, pw)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw))
    return np.einsum("ijkl,kl->ij", windows, kernel[::-1, ::-1], optimize=True)


def bilateral_filter(
    channels: np.ndarray,
    guide: np.ndarray,
    radius: int,
    sigma_spatial: float,
    sigma_range: float,
) -> np.ndarray:
    """Bilateral smoothing of a (C, H, W) stack guided by a 2D intensity map.

    Range weights are computed on ``guide`` and shared across channels so
    edges stay aligned between channels. Borders are mirrored.
    """
    channels = np.ascontiguousarray(channels, dtype=np.float64)
    guide = np.ascontiguousarray(guide, dtype=np.float64)
    c, h, w = channels.shape
    r = int(radius)
    inv2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv2sr = 1.0 / (2.0 * sigma_range * sigma_range)

    pad_guide = np.pad(guide, r, mode="reflect")
    pad_ch = np.pad(channels, ((0, 0), (r, r), (r, r)), mode="reflect")

    num = np.zeros_like(channels)
    den = np.zeros((h, w), dtype=np.float64)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ws = np.exp(-(dy * dy + dx * dx) * inv2ss)
            g = pad_guide[r + dy : r + dy + h, r + dx : r + dx + w]
            wgt = ws * np.exp(-((g - guide) ** 2) * inv2sr)
            den += wgt
            num += wgt[None, :, :] * pad_ch[:, r + dy : r + dy + h, r + dx : r + dx + w]
    return num / den[None, :, :]
