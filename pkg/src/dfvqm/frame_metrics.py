"""Per-frame-pair fidelity kernels: MSE, PSNR, SSIM (luma plane only).

SSIM follows the classic sliding-window formulation: 11x11 Gaussian window
(sigma 1.5), C1=(k1*L)^2, C2=(k2*L)^2, dense map over all fully supported
windows, then the map mean. All three kernels are pure and symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import GeometryError
from .video_io import Frame


@dataclass(frozen=True)
class MetricConfig:
    psnr_cap: float = 100.0
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    # When None, the dynamic range L is derived from the frame bit depth.
    dynamic_range: Optional[int] = None

    def __post_init__(self) -> None:
        if self.psnr_cap <= 0:
            raise ValueError("psnr_cap must be positive")
        if not (0 < self.ssim_k1 < 1 and 0 < self.ssim_k2 < 1):
            raise ValueError("ssim k1/k2 must lie in (0, 1)")
        if self.ssim_window < 1 or self.ssim_window % 2 == 0:
            raise ValueError("ssim_window must be a positive odd size")
        if self.dynamic_range is not None and self.dynamic_range < 1:
            raise ValueError("dynamic_range must be >= 1")

    def range_for(self, frame: Frame) -> int:
        if self.dynamic_range is not None:
            return self.dynamic_range
        return (1 << frame.bit_depth) - 1


DEFAULT_CONFIG = MetricConfig()


def _check_pair(a: Frame, b: Frame) -> None:
    if not a.same_geometry(b):
        raise GeometryError(
            f"frame geometry mismatch: {a.width}x{a.height}/{a.bit_depth}-bit vs "
            f"{b.width}x{b.height}/{b.bit_depth}-bit"
        )


def mse(a: Frame, b: Frame) -> float:
    """Mean squared luma difference."""
    _check_pair(a, b)
    diff = a.luma.astype(np.float64) - b.luma.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: Frame, b: Frame, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Peak signal-to-noise ratio in dB, capped at cfg.psnr_cap for identical frames."""
    err = mse(a, b)
    return psnr_from_mse(err, cfg.range_for(a), cfg)


def psnr_from_mse(err: float, dynamic_range: int, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    if err <= 0.0:
        return cfg.psnr_cap
    value = 10.0 * np.log10(dynamic_range * dynamic_range / err)
    return float(min(value, cfg.psnr_cap))


@lru_cache(maxsize=8)
def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable Gaussian; cropping the filter radius keeps only windows with
    # full support, matching a "valid" 2-D correlation.
    r = len(kernel) // 2
    t = ndimage.correlate1d(img, kernel, axis=0, mode="constant")
    t = ndimage.correlate1d(t, kernel, axis=1, mode="constant")
    return t[r:-r, r:-r] if r else t


def ssim(a: Frame, b: Frame, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean structural similarity over all sliding windows of the luma planes."""
    _check_pair(a, b)
    win = cfg.ssim_window
    if a.height < win or a.width < win:
        raise GeometryError(
            f"frame {a.width}x{a.height} smaller than {win}x{win} SSIM window"
        )
    L = cfg.range_for(a)
    c1 = (cfg.ssim_k1 * L) ** 2
    c2 = (cfg.ssim_k2 * L) ** 2
    kernel = _gaussian_kernel(win, cfg.ssim_sigma)

    x = a.luma.astype(np.float64)
    y = b.luma.astype(np.float64)
    mu_x = _windowed_mean(x, kernel)
    mu_y = _windowed_mean(y, kernel)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    var_x = _windowed_mean(x * x, kernel) - mu_xx
    var_y = _windowed_mean(y * y, kernel) - mu_yy
    cov_xy = _windowed_mean(x * y, kernel) - mu_xy

    ssim_map = ((2.0 * mu_xy + c1) * (2.0 * cov_xy + c2)) / (
        (mu_xx + mu_yy + c1) * (var_x + var_y + c2)
    )
    return float(np.mean(ssim_map))
