"""Reference enhancement and restoration algorithms.

Covers the classical baselines (interpolation upscaling, blind
Richardson-Lucy deconvolution), interlacing detection/removal, CLAHE,
detail-boosting tone mapping over a pluggable smoothing prior,
Fourier-domain periodic-artifact suppression, tiled patch processing
with an apron, and sequential enhancement chains with provenance.

Every enhancer is deterministic and returns values in [0, 1], either at
the input size or at a declared integer scale of it.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

from ._kernels import bilateral_filter, convolve2d_mirror
from .degrade import _mirror_indices, validate_kernel
from .image import channel_stack, ensure_image, from_channel_stack, luminance


class NumericsError(ArithmeticError):
    """Non-finite intermediate value; carries the iteration index."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class ChainError(RuntimeError):
    """A chain stage failed; carries the stage index and name."""

    def __init__(self, index: int, name: str, cause: Exception):
        super().__init__(f"stage {index} ({name}): {cause}")
        self.index = index
        self.stage_name = name
        self.cause = cause


# ---------------------------------------------------------------------------
# interpolation upscaling


def _catmull_rom(x: np.ndarray) -> np.ndarray:
    # Keys cubic with a = -0.5
    ax = np.abs(x)
    out = np.zeros_like(ax)
    near = ax <= 1.0
    far = (ax > 1.0) & (ax < 2.0)
    out[near] = 1.5 * ax[near] ** 3 - 2.5 * ax[near] ** 2 + 1.0
    out[far] = -0.5 * ax[far] ** 3 + 2.5 * ax[far] ** 2 - 4.0 * ax[far] + 2.0
    return out


def _axis_plan(n_in: int, factor: int, method: str) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor indices and weights for 1D center-aligned interpolation."""
    src = (np.arange(n_in * factor, dtype=np.float64) + 0.5) / factor - 0.5
    base = np.floor(src).astype(np.int64)
    t = src - base
    if method == "bilinear":
        offsets = np.array([0, 1])
        weights = np.stack([1.0 - t, t], axis=1)
    elif method == "bicubic":
        offsets = np.array([-1, 0, 1, 2])
        weights = np.stack([_catmull_rom(t - off) for off in offsets], axis=1)
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    idx = _mirror_indices(base[:, None] + offsets[None, :], n_in)
    return idx, weights


def _interp_axis0(img: np.ndarray, idx: np.ndarray, weights: np.ndarray) -> np.ndarray:
    gathered = img[idx]  # (M, K, W[, C])
    return np.einsum("mk,mk...->m...", weights, gathered)


def upscale(image: np.ndarray, factor: int, method: str = "bicubic") -> np.ndarray:
    """Upscale by an integer factor >= 2: nearest, bilinear, or bicubic.

    Bicubic uses Catmull-Rom weights; source grids are center-aligned and
    borders mirrored.
    """
    img = ensure_image(image)
    if not isinstance(factor, int) or factor < 2:
        raise ValueError(f"factor must be an integer >= 2, got {factor!r}")
    if method == "nearest":
        return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)
    idx_y, w_y = _axis_plan(img.shape[0], factor, method)
    idx_x, w_x = _axis_plan(img.shape[1], factor, method)
    out = _interp_axis0(img, idx_y, w_y)
    out = np.swapaxes(_interp_axis0(np.swapaxes(out, 0, 1), idx_x, w_x), 0, 1)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Richardson-Lucy deconvolution (non-blind and blind)

_RL_EPS = 1e-12


def _rl_image_step(estimate: np.ndarray, observed: np.ndarray, psf: np.ndarray) -> np.ndarray:
    forward = convolve2d_mirror(estimate, psf)
    ratio = observed / (forward + _RL_EPS)
    return estimate * convolve2d_mirror(ratio, psf[::-1, ::-1])


def _lagged_sums(estimate: np.ndarray, weight: np.ndarray, half: int) -> np.ndarray:
    """sum_x estimate[x - u] * weight[x] for centered lags u, mirrored."""
    h, w = estimate.shape
    ys = np.arange(h)
    xs = np.arange(w)
    out = np.empty((2 * half + 1, 2 * half + 1))
    for du in range(-half, half + 1):
        sy = _mirror_indices(ys - du, h)
        for dv in range(-half, half + 1):
            sx = _mirror_indices(xs - dv, w)
            out[du + half, dv + half] = float(np.sum(estimate[np.ix_(sy, sx)] * weight))
    return out


def _rl_psf_step(estimate: np.ndarray, observed: np.ndarray, psf: np.ndarray) -> np.ndarray:
    forward = convolve2d_mirror(estimate, psf)
    ratio = observed / (forward + _RL_EPS)
    half = psf.shape[0] // 2
    numer = _lagged_sums(estimate, ratio, half)
    denom = _lagged_sums(estimate, np.ones_like(estimate), half)
    return psf * numer / (denom + _RL_EPS)


def richardson_lucy(
    image: np.ndarray, psf: np.ndarray, iterations: int, *, clip: bool = True
) -> np.ndarray:
    """Non-blind multiplicative maximum-likelihood deconvolution.

    Runs the Richardson-Lucy update with mirrored borders, starting from
    the observed image. ``clip=False`` skips the final [0, 1] clamp (the
    estimate is non-negative throughout either way).
    """
    img = ensure_image(image)
    psf = validate_kernel(psf)
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    channels = []
    for observed in channel_stack(img):
        estimate = observed.copy()
        for it in range(iterations):
            estimate = _rl_image_step(estimate, observed, psf)
            if not np.all(np.isfinite(estimate)):
                raise NumericsError(it, "non-finite image estimate")
        channels.append(estimate)
    out = from_channel_stack(np.stack(channels))
    return np.clip(out, 0.0, 1.0) if clip else out


def blind_deconvolve(
    image: np.ndarray,
    iterations: int,
    psf_side: int = 3,
    *,
    psf_updates_per_iteration: int = 5,
    clip: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Blind deconvolution: alternating RL updates of image and PSF.

    The PSF starts as a psf_side x psf_side array of ones normalized to
    unit sum and is renormalized after every update; a single PSF is
    shared across channels (estimated on the channel mean). PSF updates
    run several sub-iterations per cycle because the multiplicative
    kernel update converges slowly on DC-dominated natural images.
    Returns the restored image and the recovered PSF.
    """
    img = ensure_image(image)
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if psf_side < 1 or psf_side % 2 == 0:
        raise ValueError(f"psf_side must be odd and >= 1, got {psf_side}")
    stack = channel_stack(img)
    gray_observed = stack.mean(axis=0)
    gray_estimate = gray_observed.copy()
    estimates = [ch.copy() for ch in stack]
    psf = np.full((psf_side, psf_side), 1.0 / (psf_side * psf_side))
    for it in range(iterations):
        for _ in range(psf_updates_per_iteration):
            psf = _rl_psf_step(gray_estimate, gray_observed, psf)
            if not np.all(np.isfinite(psf)):
                raise NumericsError(it, "non-finite PSF estimate")
            psf = np.maximum(psf, 0.0)
            total = float(psf.sum())
            if total <= 0.0:
                raise NumericsError(it, "PSF mass vanished")
            psf = psf / total
        gray_estimate = _rl_image_step(gray_estimate, gray_observed, psf)
        estimates = [_rl_image_step(est, obs, psf) for est, obs in zip(estimates, stack)]
        for est in estimates + [gray_estimate]:
            if not np.all(np.isfinite(est)):
                raise NumericsError(it, "non-finite image estimate")
    out = from_channel_stack(np.stack(estimates))
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out, psf


# ---------------------------------------------------------------------------
# interlacing

INTERLACE_THRESHOLD = 0.16


@dataclass(frozen=True)
class InterlaceReport:
    shift: float
    interlaced: bool
    threshold: float = INTERLACE_THRESHOLD


def _field_cross_spectrum(img: np.ndarray) -> np.ndarray:
    """Averaged normalized cross-power spectrum of odd rows vs their
    vertical even-neighbor means (the averaging cancels first-order
    vertical-gradient bias between the fields)."""
    h, w = img.shape
    n = img[1::2].shape[0]
    refs = np.empty((n, w))
    movs = np.empty((n, w))
    for k in range(n):
        t = 2 * k + 1
        above = img[t - 1]
        below = img[t + 1] if t + 1 < h else img[t - 1]
        refs[k] = 0.5 * (above + below)
        movs[k] = img[t]
    refs -= refs.mean(axis=1, keepdims=True)
    movs -= movs.mean(axis=1, keepdims=True)
    window = np.hanning(w)
    f_ref = np.fft.fft(refs * window, axis=1)
    f_mov = np.fft.fft(movs * window, axis=1)
    cross = f_mov * np.conj(f_ref)
    cross /= np.abs(cross) + 1e-12
    return cross.mean(axis=0)


def detect_interlacing(
    image: np.ndarray,
    threshold: float = INTERLACE_THRESHOLD,
    *,
    max_shift: float | None = None,
    upsample: int = 32,
) -> InterlaceReport:
    """Estimate the horizontal shift between the even and odd row fields.

    Each odd row is phase-correlated against the mean of its two even
    neighbors; the averaged cross-power spectrum gives a coarse peak via
    an upsampled correlation, refined by a coherence-weighted fit of the
    residual phase slope. The image is interlaced iff |shift| > threshold.
    """
    img = luminance(ensure_image(image))
    h, w = img.shape
    if h < 4:
        raise ValueError(f"image height must be >= 4, got {h}")
    if max_shift is None:
        max_shift = w / 4.0
    spectrum = _field_cross_spectrum(img)

    # coarse peak on the upsampled correlation
    m = w * upsample
    padded = np.zeros(m, dtype=complex)
    half = w // 2
    padded[:half] = spectrum[:half]
    padded[m - (w - half) :] = spectrum[half:]
    if w % 2 == 0:
        padded[m - half] *= 0.5
        padded[half] = padded[m - half]
    corr = np.real(np.fft.ifft(padded))
    lags = ((np.arange(m) + m // 2) % m - m // 2) / float(upsample)
    allowed = np.abs(lags) <= max_shift
    idx = int(np.flatnonzero(allowed)[np.argmax(corr[allowed])])
    coarse = float(lags[idx])

    # sub-pixel refinement: fit the residual phase slope over the
    # coherent low-frequency band after removing the coarse shift
    freqs = np.fft.fftfreq(w)
    compensated = spectrum * np.exp(2j * np.pi * freqs * coarse)
    sel = np.arange(1, max(3, w // 6))
    phases = np.angle(compensated[sel])
    weights = np.abs(compensated[sel]) ** 2
    ks = freqs[sel]
    denom = 2.0 * np.pi * float(np.sum(weights * ks * ks))
    residual = 0.0 if denom < 1e-18 else -float(np.sum(weights * ks * phases)) / denom
    shift = coarse + float(np.clip(residual, -0.75, 0.75))
    return InterlaceReport(shift=shift, interlaced=abs(shift) > threshold, threshold=threshold)


def deinterlace(image: np.ndarray) -> np.ndarray:
    """Drop the odd field and rebuild it by averaging vertical neighbors.

    Even rows pass through; each odd row becomes the mean of the even
    rows above and below (the last row replicates its neighbor when it
    has no row below). Output size equals input size.
    """
    img = ensure_image(image)
    out = img.copy()
    h = img.shape[0]
    for y in range(1, h, 2):
        if y + 1 < h:
            out[y] = 0.5 * (img[y - 1] + img[y + 1])
        else:
            out[y] = img[y - 1]
    return out


# ---------------------------------------------------------------------------
# CLAHE

_CLAHE_BINS = 256


def clahe(image: np.ndarray, grid: int = 8, clip_limit: float = 2.0) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    The luminance channel is equalized per tile with histogram clipping
    (the limit is a multiple of the uniform bin height, clipped excess is
    redistributed uniformly) and per-pixel bilinear blending between tile
    mappings; chroma is preserved by scaling RGB by the luminance ratio.
    """
    img = ensure_image(image)
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    lum = luminance(img)
    h, w = lum.shape
    q = np.minimum((lum * _CLAHE_BINS).astype(np.int64), _CLAHE_BINS - 1)

    y_edges = [round(i * h / grid) for i in range(grid + 1)]
    x_edges = [round(j * w / grid) for j in range(grid + 1)]
    luts = np.empty((grid, grid, _CLAHE_BINS), dtype=np.float64)
    for ti in range(grid):
        for tj in range(grid):
            region = q[y_edges[ti] : y_edges[ti + 1], x_edges[tj] : x_edges[tj + 1]]
            n = region.size
            if n == 0:
                luts[ti, tj] = np.linspace(0.0, 1.0, _CLAHE_BINS)
                continue
            hist = np.bincount(region.ravel(), minlength=_CLAHE_BINS).astype(np.float64)
            limit = clip_limit * n / _CLAHE_BINS
            excess = float(np.maximum(hist - limit, 0.0).sum())
            hist = np.minimum(hist, limit) + excess / _CLAHE_BINS
            luts[ti, tj] = np.cumsum(hist) / n

    centers_y = np.array([(y_edges[i] + y_edges[i + 1] - 1) / 2.0 for i in range(grid)])
    centers_x = np.array([(x_edges[j] + x_edges[j + 1] - 1) / 2.0 for j in range(grid)])

    def axis_blend(coords: np.ndarray, centers: np.ndarray):
        if len(centers) == 1:
            zeros = np.zeros(len(coords), dtype=np.int64)
            return zeros, zeros, np.zeros(len(coords))
        i1 = np.searchsorted(centers, coords, side="right")
        i0 = np.clip(i1 - 1, 0, len(centers) - 1)
        i1 = np.clip(i1, 0, len(centers) - 1)
        span = centers[i1] - centers[i0]
        t = np.where(span > 0, (coords - centers[i0]) / np.where(span > 0, span, 1.0), 0.0)
        return i0, i1, np.clip(t, 0.0, 1.0)

    y0, y1, ty = axis_blend(np.arange(h, dtype=np.float64), centers_y)
    x0, x1, tx = axis_blend(np.arange(w, dtype=np.float64), centers_x)
    ty2 = ty[:, None]
    tx2 = tx[None, :]
    y0g, x0g = np.meshgrid(y0, x0, indexing="ij")
    y1g, x1g = np.meshgrid(y1, x1, indexing="ij")
    new_lum = (
        (1 - ty2) * (1 - tx2) * luts[y0g, x0g, q]
        + (1 - ty2) * tx2 * luts[y0g, x1g, q]
        + ty2 * (1 - tx2) * luts[y1g, x0g, q]
        + ty2 * tx2 * luts[y1g, x1g, q]
    )
    if img.ndim == 2:
        return np.clip(new_lum, 0.0, 1.0)
    scale = new_lum / np.maximum(lum, 1e-6)
    return np.clip(img * scale[:, :, None], 0.0, 1.0)


# ---------------------------------------------------------------------------
# smoothing prior + tone mapping

def smooth_prior(image: np.ndarray, radius: int, sigma_range: float = 0.1) -> np.ndarray:
    """Edge-preserving bilateral smoothing used as the tone-mapping prior.

    Spatial Gaussian sigma is radius/2 over a (2*radius+1)^2 window;
    range weights come from luminance so channels stay aligned.
    """
    img = ensure_image(image)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    stack = channel_stack(img)
    out = bilateral_filter(stack, luminance(img), int(radius), radius / 2.0, sigma_range)
    return np.clip(from_channel_stack(np.asarray(out)), 0.0, 1.0)


_TONE_EPS = 1e-4


def tone_map_enhance(image: np.ndarray, prior: np.ndarray, gamma: float) -> np.ndarray:
    """Detail-boosting tone mapping against a structure-only prior.

    Per channel computes (I / (V + eps))**gamma * (V + eps) with
    eps = 1e-4, then clamps. gamma = 1 and V = I are both identity up to
    the eps perturbation.
    """
    img = ensure_image(image, name="image")
    v = ensure_image(prior, name="prior")
    if img.shape != v.shape:
        raise ValueError(f"image/prior shape mismatch: {img.shape} vs {v.shape}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    vf = v + _TONE_EPS
    out = np.power(img / vf, gamma) * vf
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# periodic artifact suppression

def _point_reflect(mask: np.ndarray) -> np.ndarray:
    out = mask
    for axis, n in enumerate(mask.shape):
        out = np.roll(np.flip(out, axis=axis), (2 * (n // 2) + 1 - n) % n, axis=axis)
    return out


def suppress_periodic(
    image: np.ndarray,
    dc_exclusion_radius: float = 8.0,
    peak_factor: float = 8.0,
    *,
    notch_sigma: float = 1.5,
    median_size: int = 11,
) -> np.ndarray:
    """Remove periodic artifacts by notching spectral magnitude peaks.

    Per channel: bins whose magnitude exceeds peak_factor times the local
    median (outside the DC exclusion disk) are attenuated with Gaussian
    notches; conjugate-symmetric partners are always notched together.
    With no detected peaks the image passes through unchanged.
    """
    img = ensure_image(image)
    h, w = img.shape[:2]
    cy, cx = h // 2, w // 2
    yy, xx = np.ogrid[:h, :w]
    dc_disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= dc_exclusion_radius**2

    stack = channel_stack(img)
    out = np.empty_like(stack)
    reach = int(math.ceil(4.0 * notch_sigma))
    for ci, ch in enumerate(stack):
        spec = np.fft.fftshift(np.fft.fft2(ch))
        mag = np.abs(spec)
        local_med = ndimage.median_filter(mag, size=median_size, mode="wrap")
        peaks = (mag > peak_factor * local_med) & ~dc_disk
        peaks |= _point_reflect(peaks)
        peaks &= ~dc_disk
        if not peaks.any():
            out[ci] = ch
            continue
        atten = np.ones((h, w), dtype=np.float64)
        for py, px in np.argwhere(peaks):
            y0, y1 = max(0, py - reach), min(h, py + reach + 1)
            x0, x1 = max(0, px - reach), min(w, px + reach + 1)
            wy = np.arange(y0, y1) - py
            wx = np.arange(x0, x1) - px
            d2 = wy[:, None] ** 2 + wx[None, :] ** 2
            atten[y0:y1, x0:x1] *= 1.0 - np.exp(-d2 / (2.0 * notch_sigma**2))
        filtered = np.fft.ifft2(np.fft.ifftshift(spec * atten)).real
        out[ci] = filtered
    return np.clip(from_channel_stack(out), 0.0, 1.0)


# ---------------------------------------------------------------------------
# tiled patch processing

def tile_process(
    image: np.ndarray,
    enhancer: Callable[[np.ndarray], np.ndarray],
    tile: int = 32,
    apron: int = 2,
    scale: int = 1,
) -> np.ndarray:
    """Apply a fixed-size patch enhancer over the image and stitch.

    The image is mirror-padded; each tile is carried with its apron, the
    enhancer maps (tile + 2*apron)-sided patches to scale*(tile + 2*apron)
    patches, and the scaled apron is discarded at stitch time. Windows at
    the bottom/right are shifted inward so every patch is full-size.
    """
    img = ensure_image(image)
    if tile < 1 or apron < 0:
        raise ValueError(f"bad tile/apron: {tile}/{apron}")
    if scale not in (1, 2):
        raise ValueError(f"scale must be 1 or 2, got {scale}")
    h, w = img.shape[:2]
    win = tile + 2 * apron
    pad_b = max(apron, win - (h + apron))
    pad_r = max(apron, win - (w + apron))
    pad_spec = [(apron, pad_b), (apron, pad_r)] + ([(0, 0)] if img.ndim == 3 else [])
    padded = np.pad(img, pad_spec, mode="reflect")
    ph, pw = padded.shape[:2]

    out_shape = (h * scale, w * scale) + img.shape[2:]
    out = np.empty(out_shape, dtype=np.float64)
    for y0 in range(0, h, tile):
        dy = max(0, y0 + win - ph)
        wy = y0 - dy
        for x0 in range(0, w, tile):
            dx = max(0, x0 + win - pw)
            wx = x0 - dx
            patch = padded[wy : wy + win, wx : wx + win]
            result = np.asarray(enhancer(patch), dtype=np.float64)
            expected = (win * scale, win * scale) + patch.shape[2:]
            if result.shape != expected:
                raise ValueError(
                    f"enhancer returned shape {result.shape}, expected {expected}"
                )
            core = result[
                scale * apron : scale * (apron + tile),
                scale * apron : scale * (apron + tile),
            ]
            ch = min(tile, h - y0)
            cw = min(tile, w - x0)
            out[scale * y0 : scale * (y0 + ch), scale * x0 : scale * (x0 + cw)] = core[
                scale * dy : scale * (dy + ch), scale * dx : scale * (dx + cw)
            ]
    return out


# ---------------------------------------------------------------------------
# enhancement chains

@dataclass(frozen=True)
class ChainStage:
    name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EnhancementChain:
    stages: tuple[ChainStage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("enhancement chain must have at least one stage")


@dataclass(frozen=True)
class StageProvenance:
    index: int
    name: str
    params: dict
    seconds: float
    sha256: str


def _stage_tone_map(image, gamma=1.5, prior_radius=4, prior_sigma_range=0.1):
    prior = smooth_prior(image, int(prior_radius), float(prior_sigma_range))
    return tone_map_enhance(image, prior, float(gamma))


def _stage_deconvolve(image, iterations=10, psf_side=3):
    restored, _ = blind_deconvolve(image, int(iterations), int(psf_side))
    return restored


_STAGES: dict[str, tuple[Callable, Callable[[dict], int]]] = {
    "identity": (lambda image: image.copy(), lambda p: 1),
    "upscale": (
        lambda image, factor=2, method="bicubic": upscale(image, int(factor), method),
        lambda p: int(p.get("factor", 2)),
    ),
    "deinterlace": (deinterlace, lambda p: 1),
    "clahe": (
        lambda image, grid=8, clip_limit=2.0: clahe(image, int(grid), float(clip_limit)),
        lambda p: 1,
    ),
    "smooth_prior": (
        lambda image, radius=4, sigma_range=0.1: smooth_prior(image, int(radius), float(sigma_range)),
        lambda p: 1,
    ),
    "tone_map": (_stage_tone_map, lambda p: 1),
    "suppress_periodic": (
        lambda image, dc_exclusion_radius=8.0, peak_factor=8.0: suppress_periodic(
            image, float(dc_exclusion_radius), float(peak_factor)
        ),
        lambda p: 1,
    ),
    "blind_deconvolve": (_stage_deconvolve, lambda p: 1),
}


def stage_names() -> list[str]:
    return sorted(_STAGES)


def image_digest(image: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(image, dtype=np.float64).tobytes()).hexdigest()


def run_chain(
    image: np.ndarray, chain: EnhancementChain
) -> tuple[np.ndarray, list[StageProvenance]]:
    """Apply chain stages left to right, recording timing and output hashes."""
    out = ensure_image(image)
    provenance = []
    for index, stage in enumerate(chain.stages):
        if stage.name not in _STAGES:
            raise ChainError(index, stage.name, KeyError(f"unknown stage {stage.name!r}"))
        func, scale_of = _STAGES[stage.name]
        expected_scale = scale_of(stage.params)
        before = out.shape[:2]
        start = time.perf_counter()
        try:
            out = func(out, **stage.params)
        except Exception as exc:
            raise ChainError(index, stage.name, exc) from exc
        elapsed = time.perf_counter() - start
        got = out.shape[:2]
        if got != (before[0] * expected_scale, before[1] * expected_scale):
            raise ChainError(
                index,
                stage.name,
                ValueError(f"output size {got} breaks declared scale {expected_scale}"),
            )
        provenance.append(
            StageProvenance(
                index=index,
                name=stage.name,
                params=dict(stage.params),
                seconds=elapsed,
                sha256=image_digest(out),
            )
        )
    return out, provenance


def load_chain(path: str | Path) -> EnhancementChain:
    """Load a chain config: {"stages": [{"name": ..., "params": {...}}]}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    stages_raw = raw.get("stages")
    if not isinstance(stages_raw, list) or not stages_raw:
        raise ValueError(f"{path}: chain config needs a non-empty 'stages' list")
    stages = []
    for i, entry in enumerate(stages_raw):
        name = entry.get("name")
        if not isinstance(name, str) or name not in _STAGES:
            raise ValueError(f"{path}: stage {i} has unknown name {name!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ValueError(f"{path}: stage {i} params must be an object")
        stages.append(ChainStage(name=name, params=params))
    return EnhancementChain(stages=tuple(stages))
