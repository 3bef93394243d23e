"""Synthetic degradations: blur kernels, interlacing, periodic artifacts.

These produce the controlled corruptions used to build training fixtures
and to test the enhancement module against known ground truth. All
kernels are odd-sided, non-negative, and sum to one.
"""

from __future__ import annotations

import math

import numpy as np

from ._kernels import convolve2d_mirror
from .image import channel_stack, ensure_image, from_channel_stack


class KernelError(ValueError):
    """Invalid blur kernel or kernel parameters."""


def validate_kernel(kernel: np.ndarray) -> np.ndarray:
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise KernelError(f"kernel must be square 2D, got {k.shape}")
    if k.shape[0] % 2 == 0:
        raise KernelError(f"kernel side must be odd, got {k.shape[0]}")
    if k.min() < 0.0:
        raise KernelError("kernel has negative weights")
    if abs(float(k.sum()) - 1.0) > 1e-9:
        raise KernelError(f"kernel weights sum to {k.sum():.12f}, expected 1")
    return k


def _next_odd(x: float) -> int:
    n = int(math.ceil(x))
    return n if n % 2 == 1 else n + 1


def motion_blur_kernel(length: float, theta: float, supersample: int = 8) -> np.ndarray:
    """Line-segment blur kernel of the given length and direction.

    Rasterized by counting supersampled sub-pixel centers covered by the
    unit-width segment, which keeps the mass consistent across angles.
    Kernel side is the next odd integer >= length.
    """
    if length < 1:
        raise KernelError(f"motion length must be >= 1, got {length}")
    side = _next_odd(length)
    s = supersample
    # sub-pixel center offsets from the kernel center
    coords = (np.arange(side * s) + 0.5) / s - side / 2.0
    px, py = np.meshgrid(coords, coords)
    dx, dy = math.cos(theta), math.sin(theta)
    proj = px * dx + py * dy
    perp = -px * dy + py * dx
    covered = (np.abs(proj) <= length / 2.0) & (np.abs(perp) <= 0.5)
    counts = covered.astype(np.float64).reshape(side, s, side, s).sum(axis=(1, 3))
    total = counts.sum()
    if total == 0.0:
        # degenerate only when the segment slips between sub-pixel centers
        counts[side // 2, side // 2] = 1.0
        total = 1.0
    return counts / total


def gaussian_defocus_kernel(sigma: float) -> np.ndarray:
    """Sampled isotropic Gaussian, truncated at 3*sigma and renormalized."""
    if sigma <= 0:
        raise KernelError(f"sigma must be > 0, got {sigma}")
    half = int(math.ceil(3.0 * sigma))
    coords = np.arange(-half, half + 1, dtype=np.float64)
    gx = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    k = np.outer(gx, gx)
    return k / k.sum()


def convolve(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve every channel with the kernel, mirrored borders, clamped."""
    img = ensure_image(image)
    k = validate_kernel(kernel)
    stack = channel_stack(img)
    out = np.stack([convolve2d_mirror(ch, k) for ch in stack])
    return np.clip(from_channel_stack(out), 0.0, 1.0)


def _mirror_indices(idx: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    j = np.mod(idx, period)
    return np.where(j >= n, period - j, j)


def _shift_rows(rows: np.ndarray, shift: float) -> np.ndarray:
    """Translate row contents horizontally by ``shift`` pixels.

    Sub-pixel shifts use linear interpolation; samples beyond the borders
    are mirrored. Integer shifts are exact gathers.
    """
    w = rows.shape[1]
    pos = np.arange(w, dtype=np.float64) - shift
    base = np.floor(pos).astype(np.int64)
    t = pos - base
    i0 = _mirror_indices(base, w)
    i1 = _mirror_indices(base + 1, w)
    return rows[:, i0] * (1.0 - t) + rows[:, i1] * t


def simulate_interlacing(image: np.ndarray, shift: float) -> np.ndarray:
    """Displace the odd-row field horizontally, leaving even rows intact."""
    img = ensure_image(image)
    w = img.shape[1]
    if abs(shift) > w / 4.0:
        raise ValueError(f"|shift| = {abs(shift)} exceeds width/4 = {w / 4.0}")
    out = img.copy()
    stack = channel_stack(out)
    for ch in stack:
        ch[1::2] = _shift_rows(ch[1::2], shift)
    return np.clip(from_channel_stack(stack), 0.0, 1.0)


def checkerboard(height: int, width: int, period: float) -> np.ndarray:
    """A +/-1 checkerboard with the given spatial period along both axes."""
    ys = np.floor(2.0 * np.arange(height) / period).astype(np.int64)
    xs = np.floor(2.0 * np.arange(width) / period).astype(np.int64)
    return ((ys[:, None] + xs[None, :]) % 2 * 2 - 1).astype(np.float64)


def inject_periodic(image: np.ndarray, period: float, amplitude: float) -> np.ndarray:
    """Add a checkerboard artifact of the given period to all channels."""
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    if not (0.0 < amplitude <= 0.5):
        raise ValueError(f"amplitude must be in (0, 0.5], got {amplitude}")
    img = ensure_image(image)
    pattern = amplitude * checkerboard(img.shape[0], img.shape[1], period)
    if img.ndim == 3:
        pattern = pattern[:, :, None]
    return np.clip(img + pattern, 0.0, 1.0)


def apply_recipe(image: np.ndarray, recipe: dict, rng: np.random.Generator) -> np.ndarray:
    """Apply a degradation recipe: {"ops": [{"name": ..., params}, ...]}.

    Supported ops: motion_blur (length, theta or "random"), defocus
    (sigma), interlace (shift), checkerboard (period, amplitude).
    """
    ops = recipe.get("ops")
    if not isinstance(ops, list) or not ops:
        raise ValueError("recipe must contain a non-empty 'ops' list")
    out = ensure_image(image)
    for op in ops:
        name = op.get("name")
        if name == "motion_blur":
            theta = op.get("theta", "random")
            if theta == "random":
                theta = float(rng.uniform(0.0, math.pi))
            out = convolve(out, motion_blur_kernel(float(op["length"]), float(theta)))
        elif name == "defocus":
            out = convolve(out, gaussian_defocus_kernel(float(op["sigma"])))
        elif name == "interlace":
            out = simulate_interlacing(out, float(op["shift"]))
        elif name == "checkerboard":
            out = inject_periodic(out, float(op["period"]), float(op["amplitude"]))
        else:
            raise ValueError(f"unknown degradation op {name!r}")
    return out
