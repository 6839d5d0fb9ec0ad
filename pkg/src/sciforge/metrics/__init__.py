"""Reference-based standard metrics and distribution-gap numerics."""

from __future__ import annotations

from .embeddings import export_embeddings
from .frechet import (
    GaussianStats,
    cosine_score,
    fid,
    fit_gaussian,
    frechet_distance,
)
from .images import GrayImage, psnr, resize_bilinear, ssim
from .spectrum import (
    DEFAULT_ANALYSIS_SIZE,
    RadialSpectrum,
    SpectrumDelta,
    radial_log_spectrum,
    spectrum_delta,
)

__all__ = [
    "DEFAULT_ANALYSIS_SIZE",
    "GaussianStats",
    "GrayImage",
    "RadialSpectrum",
    "SpectrumDelta",
    "cosine_score",
    "export_embeddings",
    "fid",
    "fit_gaussian",
    "frechet_distance",
    "psnr",
    "radial_log_spectrum",
    "resize_bilinear",
    "spectrum_delta",
    "ssim",
]
