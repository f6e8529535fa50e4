"""Image quality metrics: PSNR and SSIM.

Both operate on float images in [0, 1].  SSIM follows the standard
definition: C1 = 0.01**2, C2 = 0.03**2, an 11x11 Gaussian window with
sigma 1.5, means over valid (fully inside) windows, averaged per channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from .validation import check_color_image, check_same_shape

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


@dataclass(frozen=True)
class Metrics:
    """PSNR/SSIM pair with the per-pixel absolute error map."""

    psnr: float
    ssim: float
    abs_error: np.ndarray


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    a = check_color_image(a, "first image")
    b = check_color_image(b, "second image")
    check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def _filter_valid(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    pad = window.shape[0] // 2
    full = correlate(plane, window, mode="nearest")
    return full[pad:-pad, pad:-pad]


def ssim(a, b) -> float:
    """Mean local structural similarity over valid 11x11 windows.

    Raises:
        ValueError: if the images are smaller than the window.
    """
    a = check_color_image(a, "first image")
    b = check_color_image(b, "second image")
    check_same_shape(a, b)
    if a.shape[0] < _SSIM_WINDOW or a.shape[1] < _SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM, got {a.shape[:2]}"
        )
    window = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)
    scores = []
    for ch in range(a.shape[2]):
        x = a[:, :, ch]
        y = b[:, :, ch]
        mu_x = _filter_valid(x, window)
        mu_y = _filter_valid(y, window)
        var_x = _filter_valid(x * x, window) - mu_x**2
        var_y = _filter_valid(y * y, window) - mu_y**2
        cov = _filter_valid(x * y, window) - mu_x * mu_y
        score = ((2 * mu_x * mu_y + _SSIM_C1) * (2 * cov + _SSIM_C2)) / (
            (mu_x**2 + mu_y**2 + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
        )
        scores.append(score.mean())
    return float(np.mean(scores))


def compare(a, b) -> Metrics:
    """Full metric bundle for two images of equal shape."""
    a = check_color_image(a, "first image")
    b = check_color_image(b, "second image")
    check_same_shape(a, b)
    return Metrics(psnr=psnr(a, b), ssim=ssim(a, b), abs_error=np.abs(a - b))
