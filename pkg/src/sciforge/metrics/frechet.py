"""Fréchet distance between Gaussian fits of embedding sets, and the
embedding-cosine score.

The matrix square root goes through symmetric eigendecompositions with
negative eigenvalues clamped at zero: tr((S1 S2)^{1/2}) equals
tr((A S2 A)^{1/2}) for A = S1^{1/2}, and A S2 A is symmetric PSD.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DimMismatch, NotPSD, TooFewSamples
from ..providers import EmbedProvider


@dataclass
class GaussianStats:
    mean: np.ndarray  # (d,)
    covariance: np.ndarray  # (d, d)

    def validate(self) -> None:
        if self.mean.ndim != 1:
            raise DimMismatch(f"mean must be 1-D, got shape {self.mean.shape}")
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise DimMismatch(
                f"covariance shape {self.covariance.shape} != ({d}, {d})"
            )
        asym = float(np.max(np.abs(self.covariance - self.covariance.T)))
        if asym > 1e-9:
            raise DimMismatch(f"covariance asymmetric by {asym}")


def _check_psd(cov: np.ndarray, eigenvalues: np.ndarray) -> None:
    floor = -1e-6 * max(float(np.trace(cov)), 1.0)
    smallest = float(eigenvalues.min())
    if smallest < floor:
        raise NotPSD(f"eigenvalue {smallest} below tolerance {floor}")


def _sym_sqrt(matrix: np.ndarray, check: bool = False) -> np.ndarray:
    sym = (matrix + matrix.T) / 2.0
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    if check:
        _check_psd(sym, eigenvalues)
    clamped = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors * np.sqrt(clamped)) @ eigenvectors.T


def frechet_distance(p: GaussianStats, q: GaussianStats) -> float:
    """||mu1-mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}), clamped at zero."""
    p.validate()
    q.validate()
    if p.mean.shape != q.mean.shape:
        raise DimMismatch(
            f"dimension mismatch: {p.mean.shape[0]} vs {q.mean.shape[0]}"
        )
    sqrt_p = _sym_sqrt(p.covariance, check=True)
    eigenvalues_q = np.linalg.eigvalsh((q.covariance + q.covariance.T) / 2.0)
    _check_psd(q.covariance, eigenvalues_q)

    inner = sqrt_p @ q.covariance @ sqrt_p
    inner_eigenvalues = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    trace_sqrt = float(np.sum(np.sqrt(np.clip(inner_eigenvalues, 0.0, None))))

    delta = p.mean - q.mean
    distance = (
        float(delta @ delta)
        + float(np.trace(p.covariance))
        + float(np.trace(q.covariance))
        - 2.0 * trace_sqrt
    )
    if distance < -1e-8:
        raise NotPSD(f"distance {distance} is negative beyond tolerance")
    return max(distance, 0.0)


def fit_gaussian(vectors: list[list[float]] | np.ndarray) -> GaussianStats:
    """Mean and unbiased covariance of a sample of embedding vectors."""
    data = np.asarray(vectors, dtype=np.float64)
    if data.ndim != 2:
        raise DimMismatch(f"expected (n, d) samples, got shape {data.shape}")
    n, d = data.shape
    if n < 2:
        raise TooFewSamples(f"covariance needs at least 2 samples, got {n}")
    mean = data.mean(axis=0)
    covariance = np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
    stats = GaussianStats(mean=mean, covariance=covariance)
    stats.validate()
    return stats


def _payload(image: bytes | str | Path) -> bytes | str:
    if isinstance(image, Path):
        return image.read_bytes()
    return image


def fid(
    real_images: list[bytes | Path],
    synth_images: list[bytes | Path],
    embed_provider: EmbedProvider,
) -> float:
    """Fréchet distance between embedding statistics of two image sets.

    Below d+1 samples per side the covariance estimate is rank-deficient;
    the distance is still defined and returned, but treat small-sample
    values as unstable.
    """
    if len(real_images) < 2 or len(synth_images) < 2:
        raise TooFewSamples("need at least 2 images per side")
    real = [embed_provider.embed(_payload(img)).values for img in real_images]
    synth = [embed_provider.embed(_payload(img)).values for img in synth_images]
    return frechet_distance(fit_gaussian(real), fit_gaussian(synth))


def cosine_score(
    image: bytes | Path,
    text: str,
    embed_provider: EmbedProvider,
) -> float:
    """100 x cosine similarity between image and text embeddings."""
    image_vec = np.asarray(embed_provider.embed(_payload(image)).values)
    text_vec = np.asarray(embed_provider.embed(text).values)
    if image_vec.shape != text_vec.shape:
        raise DimMismatch(
            f"modal dimensions differ: {image_vec.shape[0]} vs {text_vec.shape[0]}"
        )
    denom = float(np.linalg.norm(image_vec) * np.linalg.norm(text_vec))
    if denom == 0.0:
        return 0.0
    return 100.0 * float(image_vec @ text_vec) / denom
