"""Grayscale image representation and the paired metrics PSNR / SSIM.

Color images reduce to gray with luma weights 0.299/0.587/0.114. For paired
comparison the synthetic image is resampled (bilinear) to the reference's
dimensions. SSIM uses the standard 11x11 Gaussian window (sigma 1.5),
K1=0.01, K2=0.03, dynamic range 255; windows wrap at the borders so the
score is exactly invariant to a cyclic translation applied to both images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import correlate

from ..errors import DimMismatch, TooSmall

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) float64 in [0, 255]

    def validate(self) -> None:
        if self.pixels.shape != (self.height, self.width):
            raise DimMismatch(
                f"pixel array {self.pixels.shape} != (height={self.height}, width={self.width})"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise DimMismatch("pixels contain non-finite values")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "GrayImage":
        pixels = np.asarray(array, dtype=np.float64)
        if pixels.ndim != 2:
            raise DimMismatch(f"expected a 2-D array, got shape {pixels.shape}")
        img = cls(width=pixels.shape[1], height=pixels.shape[0], pixels=pixels)
        img.validate()
        return img

    @classmethod
    def from_png(cls, path: str | Path) -> "GrayImage":
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        gray = rgb @ np.asarray(LUMA_WEIGHTS, dtype=np.float64)
        return cls.from_array(gray)


def resize_bilinear(img: GrayImage, width: int, height: int) -> GrayImage:
    if (img.width, img.height) == (width, height):
        return img
    pil = Image.fromarray(img.pixels.astype(np.float32), mode="F")
    resized = pil.resize((width, height), Image.BILINEAR)
    return GrayImage.from_array(np.asarray(resized, dtype=np.float64))


def _check_same_shape(a: GrayImage, b: GrayImage) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DimMismatch(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal-to-noise ratio in dB, capped at 100 for identical images."""
    _check_same_shape(a, b)
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(DYNAMIC_RANGE**2 / mse))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a: GrayImage, b: GrayImage) -> float:
    """Mean local structural similarity, in [-1, 1]."""
    _check_same_shape(a, b)
    if min(a.width, a.height) < SSIM_WINDOW:
        raise TooSmall(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
            f"got {a.width}x{a.height}"
        )
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    x = a.pixels
    y = b.pixels

    def smooth(z: np.ndarray) -> np.ndarray:
        return correlate(z, kernel, mode="wrap")

    mu_x = smooth(x)
    mu_y = smooth(y)
    sigma_x = smooth(x * x) - mu_x**2
    sigma_y = smooth(y * y) - mu_y**2
    sigma_xy = smooth(x * y) - mu_x * mu_y

    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    numerator = (2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)
    denominator = (mu_x**2 + mu_y**2 + c1) * (sigma_x + sigma_y + c2)
    return float(np.mean(numerator / denominator))
