"""Full-reference image quality metrics: PSNR, SSIM, per-frame video SSIM.

SSIM uses Gaussian-weighted local statistics on valid window positions only
(no padding); color inputs are reduced to BT.601 luminance first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core.types import ImageGray, ImageRGB


class UnsupportedMetricError(RuntimeError):
    pass


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if not (self.sigma > 0 and self.k1 > 0 and self.k2 > 0):
            raise ValueError("sigma, k1, k2 must be > 0")
        if not self.dynamic_range > 0:
            raise ValueError("dynamic_range must be > 0")

    def kernel1d(self) -> np.ndarray:
        """Normalized 1-d Gaussian; the 2-d window is its outer product."""
        half = self.window // 2
        x = np.arange(-half, half + 1, dtype=np.float64)
        g = np.exp(-(x * x) / (2.0 * self.sigma * self.sigma))
        return g / g.sum()


def luminance(image: ImageRGB) -> np.ndarray:
    """BT.601 luma of an RGB image, float64 in [0, 255]."""
    p = image.data.astype(np.float64)
    return 0.299 * p[..., 0] + 0.587 * p[..., 1] + 0.114 * p[..., 2]


def _as_plane(img) -> np.ndarray:
    if isinstance(img, ImageRGB):
        return luminance(img)
    if isinstance(img, ImageGray):
        return img.data.astype(np.float64)
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d grayscale plane")
    return arr


def psnr(a: ImageRGB, b: ImageRGB) -> float:
    """10*log10(L^2 / MSE) over all channels; identical inputs give +inf."""
    pa, pb = a.data, b.data
    if pa.shape != pb.shape:
        raise ValueError("image dimensions differ")
    diff = pa.astype(np.float64) - pb.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def _valid_filter(arr: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable 'valid'-mode correlation; window axis lands last
    tmp = sliding_window_view(arr, len(g), axis=1) @ g
    return sliding_window_view(tmp, len(g), axis=0) @ g


def ssim(a, b, params: SsimParams | None = None) -> float:
    params = params or SsimParams()
    pa = _as_plane(a)
    pb = _as_plane(b)
    if pa.shape != pb.shape:
        raise ValueError("image dimensions differ")
    if min(pa.shape) < params.window:
        raise ValueError(
            f"image smaller than the {params.window}x{params.window} window"
        )
    g = params.kernel1d()
    mu_a = _valid_filter(pa, g)
    mu_b = _valid_filter(pb, g)
    e_aa = _valid_filter(pa * pa, g)
    e_bb = _valid_filter(pb * pb, g)
    e_ab = _valid_filter(pa * pb, g)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class VideoScore:
    per_frame: list[float] = field(repr=False)
    mean: float = 0.0
    min: float = 0.0

    def __post_init__(self):
        if not self.per_frame:
            raise ValueError("empty score list")
        if self.min > self.mean + 1e-12:
            raise ValueError("min exceeds mean")


def video_ssim(frames_a, frames_b, params: SsimParams | None = None) -> VideoScore:
    """Per-frame SSIM of two equal-length sequences, with mean and minimum."""
    if len(frames_a) != len(frames_b):
        raise ValueError("sequence lengths differ")
    if len(frames_a) == 0:
        raise ValueError("empty sequence")
    per = [ssim(fa, fb, params) for fa, fb in zip(frames_a, frames_b)]
    return VideoScore(per, mean=float(np.mean(per)), min=float(np.min(per)))


def lpips(*_args, **_kwargs):
    raise UnsupportedMetricError("requires external perceptual model")
