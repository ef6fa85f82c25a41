"""Masked depth smoothing.

Depth maps rendered from splat-style scene representations tend to carry
pinholes. A plain Gaussian blur would drag background depth across the
silhouette, so smoothing is a normalized convolution restricted to valid
in-mask samples:

    out(x) = sum_y w(x - y) d(y) / sum_y w(x - y),  w(d) = exp(-|d|^2 / 2 sigma^2)

where y ranges over valid in-mask pixels inside the kernel window. Pixels
outside the mask, and pixels whose window holds no valid sample, come out
invalid (0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BinaryMask, DepthMap


@dataclass(frozen=True)
class SmoothParams:
    sigma: float = 2.0
    kernel_radius: int | None = None  # None -> ceil(3 * sigma)
    max_depth: float = math.inf

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.kernel_radius is not None and self.kernel_radius < 1:
            raise ValueError("kernel_radius must be >= 1")
        if not self.max_depth > 0:
            raise ValueError("max_depth must be > 0")

    @property
    def radius(self) -> int:
        if self.kernel_radius is not None:
            return self.kernel_radius
        return int(math.ceil(3.0 * self.sigma))


def _gauss1d(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    return np.exp(-(x * x) / (2.0 * sigma * sigma))


def _sep_correlate(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable symmetric-kernel correlation with zero padding."""
    r = (len(k) - 1) // 2
    h, w = img.shape
    pad = np.zeros((h + 2 * r, w + 2 * r), dtype=np.float64)
    pad[r : r + h, r : r + w] = img
    cols = np.lib.stride_tricks.sliding_window_view(pad, len(k), axis=1) @ k
    rows = np.lib.stride_tricks.sliding_window_view(cols, len(k), axis=0) @ k
    return rows


def smooth_depth(depth: DepthMap, mask: BinaryMask, params: SmoothParams | None = None) -> DepthMap:
    """Gaussian normalized convolution over valid in-mask depth samples."""
    if params is None:
        params = SmoothParams()
    if (depth.height, depth.width) != (mask.height, mask.width):
        raise ValueError(
            f"depth {depth.width}x{depth.height} and mask "
            f"{mask.width}x{mask.height} dimensions differ"
        )
    k = _gauss1d(params.sigma, params.radius)
    valid = depth.validity() & mask.bits
    d = np.where(valid, depth.depth.astype(np.float64), 0.0)
    num = _sep_correlate(d, k)
    den = _sep_correlate(valid.astype(np.float64), k)
    out = np.zeros_like(d)
    ok = mask.bits & (den > 0.0)
    out[ok] = num[ok] / den[ok]
    return DepthMap(out.astype(np.float32))


def clamp_range(depth: DepthMap, max_depth: float) -> DepthMap:
    """Invalidate (zero out) entries that are non-finite, <= 0, or beyond
    max_depth."""
    if not max_depth > 0:
        raise ValueError("max_depth must be > 0")
    d = depth.depth.copy()
    bad = ~np.isfinite(d) | (d <= 0) | (d > max_depth)
    d[bad] = 0.0
    return DepthMap(d)
