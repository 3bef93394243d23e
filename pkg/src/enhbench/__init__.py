"""enhbench: a benchmark harness for image restoration and enhancement.

Evaluates enhancement algorithms on two axes: human-perceived quality
(a pairwise rating study with sentinel-validated raters) and object
recognition improvement (top-5 synset metrics over externally produced
classifier predictions). Ships reference implementations of classical
enhancement algorithms and synthetic degradations for fixture building.

Images are plain NumPy arrays, shape (H, W) or (H, W, 3), float64 values
in [0, 1]. See :mod:`enhbench.image` for the contract helpers.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
