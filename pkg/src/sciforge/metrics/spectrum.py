"""Radial log-spectrum and the synthetic-vs-real high-frequency delta.

The image is mean-subtracted (killing DC), Fourier transformed, magnitude
shifted to center, and log(1+|.|) is averaged over annuli of integer
radius. Bins cover radii 1..floor(min(H,W)/2); the DC bin is excluded by
construction (mean subtraction zeroes it anyway). The delta analysis
averages per-image spectra per set at a common analysis size and reports
the mean difference over the top third of radii, where synthetic images
show excess energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySetError, TooSmall
from .images import GrayImage, resize_bilinear

DEFAULT_ANALYSIS_SIZE = 256


@dataclass
class RadialSpectrum:
    values: np.ndarray  # mean log-magnitude per radius bin
    radii: np.ndarray  # integer radii 1..floor(min(H,W)/2)

    @property
    def nbins(self) -> int:
        return len(self.values)


@dataclass
class SpectrumDelta:
    delta: np.ndarray  # synth mean spectrum - real mean spectrum, per bin
    radii: np.ndarray
    high_band_mean: float
    high_band_start: int  # first radius in the top-third band


def radial_log_spectrum(img: GrayImage) -> RadialSpectrum:
    if img.height < 4 or img.width < 4:
        raise TooSmall(f"need at least 4x4, got {img.width}x{img.height}")
    x = img.pixels - img.pixels.mean()
    magnitude = np.abs(np.fft.fftshift(np.fft.fft2(x)))
    log_magnitude = np.log1p(magnitude)

    height, width = x.shape
    cy, cx = height // 2, width // 2
    v, u = np.indices((height, width))
    radius = np.rint(np.hypot(v - cy, u - cx)).astype(np.int64)

    nbins = min(height, width) // 2
    flat_radius = radius.ravel()
    flat_values = log_magnitude.ravel()
    in_range = (flat_radius >= 1) & (flat_radius <= nbins)
    sums = np.bincount(
        flat_radius[in_range], weights=flat_values[in_range], minlength=nbins + 1
    )
    counts = np.bincount(flat_radius[in_range], minlength=nbins + 1)
    values = sums[1:] / counts[1:]
    return RadialSpectrum(values=values, radii=np.arange(1, nbins + 1))


def _mean_spectrum(images: list[GrayImage], size: int) -> RadialSpectrum:
    spectra = [
        radial_log_spectrum(resize_bilinear(img, size, size)) for img in images
    ]
    stacked = np.stack([s.values for s in spectra])
    return RadialSpectrum(values=stacked.mean(axis=0), radii=spectra[0].radii)


def spectrum_delta(
    real_set: list[GrayImage],
    synth_set: list[GrayImage],
    *,
    analysis_size: int = DEFAULT_ANALYSIS_SIZE,
) -> SpectrumDelta:
    """Per-bin synthetic-minus-real spectrum difference at a common size."""
    if not real_set or not synth_set:
        raise EmptySetError("both image sets must be non-empty")
    real = _mean_spectrum(real_set, analysis_size)
    synth = _mean_spectrum(synth_set, analysis_size)
    delta = synth.values - real.values
    max_radius = int(real.radii[-1])
    band_start = (2 * max_radius) // 3 + 1
    band = delta[real.radii >= band_start]
    return SpectrumDelta(
        delta=delta,
        radii=real.radii,
        high_band_mean=float(band.mean()),
        high_band_start=band_start,
    )
