import numpy as np
import pytest
import skimage.data


def _to_gray01(img):
    if img.ndim == 3:
        img = img @ np.array([0.299, 0.587, 0.114])
    img = img.astype(np.float64) / 255.0
    return np.clip(img, 0.0, 1.0)


def _block2(img):
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    img = img[:h, :w]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def load_natural(name: str) -> np.ndarray:
    """A bundled photograph as grayscale [0,1], even dims, <=300px sides."""
    img = _to_gray01(getattr(skimage.data, name)())
    if min(img.shape) > 300:
        img = _block2(img)
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    return np.ascontiguousarray(img[:h, :w])


NATURAL_NAMES = ("camera", "moon", "coins", "page", "gravel")


@pytest.fixture(scope="session")
def natural_images() -> dict[str, np.ndarray]:
    return {name: load_natural(name) for name in NATURAL_NAMES}


def horizontal_texture(side: int = 128, seed: int = 2, h_sigma: float = 4.0) -> np.ndarray:
    """Synthetic fixture: smooth horizontal texture with a mild vertical
    drift. Vertically near-uniform so horizontal deblurring dominates."""
    rng = np.random.default_rng(seed)

    def smooth1d(n, sigma):
        x = rng.standard_normal(n)
        r = int(3 * sigma)
        k = np.exp(-0.5 * (np.arange(-r, r + 1) / sigma) ** 2)
        return np.convolve(x, k / k.sum(), mode="same")

    p = smooth1d(side, h_sigma)
    p = (p - p.min()) / (p.max() - p.min()) * 0.8 + 0.1
    q = smooth1d(side, 16.0)
    q = (q - q.min()) / (q.max() - q.min())
    img = p[None, :] * 0.7 + 0.3 * 0.5 * (p[None, :] + q[:, None])
    return np.clip(img, 0.0, 1.0)
