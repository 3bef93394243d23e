"""Image carrier conventions and lossless raster I/O.

An image is a float64 ndarray of shape (H, W) for grayscale or (H, W, 3)
for RGB, with every value finite and in [0, 1]. All pixel operations in
the package accept and return arrays in this form.
"""

from __future__ import annotations

import os
from pathlib import Path

import cv2
import numpy as np


class ImageError(ValueError):
    """Raised for invalid image arrays or unreadable/unsupported files."""


def ensure_image(arr: np.ndarray, *, name: str = "image") -> np.ndarray:
    """Validate and normalize an array to the package image contract.

    Accepts (H, W), (H, W, 1) or (H, W, 3); returns float64 with the
    single-channel axis squeezed away. Raises ImageError on violations.
    """
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[:, :, 0]
    if a.ndim not in (2, 3):
        raise ImageError(f"{name}: expected 2 or 3 dimensions, got {a.ndim}")
    if a.ndim == 3 and a.shape[2] != 3:
        raise ImageError(f"{name}: expected 1 or 3 channels, got {a.shape[2]}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ImageError(f"{name}: empty image {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ImageError(f"{name}: non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ImageError(f"{name}: values outside [0, 1] ({a.min():.4g}..{a.max():.4g})")
    return a


def channel_stack(img: np.ndarray) -> np.ndarray:
    """View an image as a (C, H, W) stack (C=1 for grayscale)."""
    if img.ndim == 2:
        return img[None, :, :]
    return np.moveaxis(img, 2, 0)


def from_channel_stack(stack: np.ndarray) -> np.ndarray:
    """Inverse of :func:`channel_stack`."""
    if stack.shape[0] == 1:
        return stack[0]
    return np.moveaxis(stack, 0, 2)


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an image (identity for grayscale)."""
    if img.ndim == 2:
        return img
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Read an 8- or 16-bit grayscale/RGB raster file to a [0, 1] image."""
    path = Path(path)
    if not path.is_file():
        raise ImageError(f"no such image file: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageError(f"unsupported or truncated image file: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raw = raw[:, :, :3]
        if raw.shape[2] != 3:
            raise ImageError(f"unsupported channel count {raw.shape[2]} in {path}")
        raw = raw[:, :, ::-1]  # BGR -> RGB
    return raw.astype(np.float64) / scale


def write_image(img: np.ndarray, path: str | os.PathLike, *, bit_depth: int = 8) -> None:
    """Write an image losslessly as PNG at the given bit depth (8 or 16).

    Values are rounded to the bit-depth grid; inputs already on that grid
    round-trip bit-identically through :func:`read_image`.
    """
    img = ensure_image(img)
    if bit_depth == 8:
        scaled = np.rint(img * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        scaled = np.rint(img * 65535.0).astype(np.uint16)
    else:
        raise ImageError(f"bit_depth must be 8 or 16, got {bit_depth}")
    if scaled.ndim == 3:
        scaled = scaled[:, :, ::-1]  # RGB -> BGR
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ImageError(f"only PNG output is supported, got {path.suffix!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp.png")
    if not cv2.imwrite(str(tmp), scaled):
        raise ImageError(f"failed to write {path}")
    os.replace(tmp, path)


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images (peak = 1)."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ImageError(f"psnr shape mismatch {reference.shape} vs {test.shape}")
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0.0:
        return float("inf")
    return -10.0 * np.log10(mse)
