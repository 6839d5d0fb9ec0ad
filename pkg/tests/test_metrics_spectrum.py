from __future__ import annotations

import csv

import numpy as np
import pytest

from sciforge.errors import EmptySetError, TooSmall
from sciforge.metrics import (
    GrayImage,
    export_embeddings,
    radial_log_spectrum,
    spectrum_delta,
)
from sciforge.providers import ByteHistogramEmbedder


def test_constant_image_gives_all_zero_bins():
    img = GrayImage.from_array(np.full((32, 32), 77.0))
    spectrum = radial_log_spectrum(img)
    assert np.allclose(spectrum.values, 0.0)


def test_bin_count_is_half_min_side():
    for shape, expected in (((64, 64), 32), ((64, 128), 32), ((10, 40), 5)):
        img = GrayImage.from_array(np.random.default_rng(0).uniform(0, 255, shape))
        assert radial_log_spectrum(img).nbins == expected


def test_impulse_image_yields_flat_spectrum():
    pixels = np.zeros((64, 64))
    pixels[32, 32] = 255.0
    spectrum = radial_log_spectrum(GrayImage.from_array(pixels))
    assert spectrum.values.max() - spectrum.values.min() < 1e-9
    assert spectrum.values[0] == pytest.approx(np.log1p(255.0), abs=1e-9)


def test_parseval_identity_on_random_images():
    rng = np.random.default_rng(41)
    for _ in range(10):
        pixels = rng.uniform(0, 255, (64, 64))
        x = pixels - pixels.mean()
        fourier = np.fft.fft2(x)
        lhs = np.sum(np.abs(fourier) ** 2) / x.size
        rhs = np.sum(x**2)
        assert abs(lhs - rhs) <= 1e-6 * rhs


def test_too_small_rejected():
    with pytest.raises(TooSmall):
        radial_log_spectrum(GrayImage.from_array(np.zeros((3, 8))))


def _smooth_set(rng, n=3, size=64):
    images = []
    for _ in range(n):
        base = rng.uniform(64, 192, (4, 4))
        up = np.kron(base, np.ones((size // 4, size // 4)))
        images.append(GrayImage.from_array(up))
    return images


def test_spectrum_delta_identical_sets_is_zero():
    rng = np.random.default_rng(7)
    images = _smooth_set(rng)
    delta = spectrum_delta(images, images, analysis_size=64)
    assert np.allclose(delta.delta, 0.0)
    assert delta.high_band_mean == 0.0


def test_alternating_noise_raises_high_band():
    rng = np.random.default_rng(13)
    real = _smooth_set(rng, n=4, size=64)
    cols = np.arange(64)
    stripes = 16.0 * np.where(cols % 2 == 0, 1.0, -1.0)[None, :]
    synth = [GrayImage.from_array(img.pixels + stripes) for img in real]
    delta = spectrum_delta(real, synth, analysis_size=64)
    assert delta.high_band_mean > 0.0


def test_spectrum_delta_empty_set_rejected():
    rng = np.random.default_rng(1)
    with pytest.raises(EmptySetError):
        spectrum_delta([], _smooth_set(rng), analysis_size=64)


# --- embedding export --------------------------------------------------------


def test_export_embeddings_counts_and_shape(tmp_path):
    embedder = ByteHistogramEmbedder(dim=4)
    sets = {
        "real": [(f"r{i}", f"real payload {i}".encode()) for i in range(3)],
        "synth": [(f"s{i}", f"synth payload {i}".encode()) for i in range(3)],
    }
    out = tmp_path / "embeddings.csv"
    assert export_embeddings(sets, embedder, out) == 6
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["set_label", "id", "v0", "v1", "v2", "v3"]
    assert len(rows) == 7
    assert {row[0] for row in rows[1:]} == {"real", "synth"}


def test_export_embeddings_empty_input(tmp_path):
    out = tmp_path / "embeddings.csv"
    assert export_embeddings({}, ByteHistogramEmbedder(dim=4), out) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1


def test_export_relabeling_changes_only_label_column(tmp_path):
    embedder = ByteHistogramEmbedder(dim=4)
    payloads = [(f"i{i}", f"payload {i}".encode()) for i in range(2)]
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    export_embeddings({"alpha": payloads}, embedder, out_a)
    export_embeddings({"beta": payloads}, embedder, out_b)
    with open(out_a, newline="") as fh:
        rows_a = list(csv.reader(fh))
    with open(out_b, newline="") as fh:
        rows_b = list(csv.reader(fh))
    for row_a, row_b in zip(rows_a[1:], rows_b[1:]):
        assert row_a[0] == "alpha" and row_b[0] == "beta"
        assert row_a[1:] == row_b[1:]
