"""Synthetic texture datasets with known class structure."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import imageio
from .filterbank import frequency_grid


def _shaped_noise(rng, shape, gain) -> np.ndarray:
    spectrum = np.fft.fft2(rng.standard_normal(shape)) * gain
    out = np.real(np.fft.ifft2(spectrum))
    return out / out.std()


def oriented_band(shape, center: float, width: float, theta: float, spread: float) -> np.ndarray:
    """Frequency gain of a band at radius ``center`` around orientation ``theta`` (both half-planes)."""
    wy, wx = frequency_grid(*shape)
    radius = np.hypot(wy, wx)
    angle = np.arctan2(wy, wx)
    # orientation distance modulo pi, so the band is symmetric and the noise real
    d = np.angle(np.exp(2j * (angle - theta))) / 2
    return np.exp(-((radius - center) ** 2) / (2 * width ** 2) - d ** 2 / (2 * spread ** 2))


def lowpass_gain(shape, cutoff: float) -> np.ndarray:
    wy, wx = frequency_grid(*shape)
    return np.exp(-(wy ** 2 + wx ** 2) / (2 * cutoff ** 2))


def fine_coarse_image(rng, shape, theta: float, fine_weight: float = 0.6,
                      fine_center: float = 0.4 * math.pi, coarse_cutoff: float = 0.08 * math.pi) -> np.ndarray:
    """Coarse isotropic noise shared by all classes plus a fine oriented band set by ``theta``."""
    fine = _shaped_noise(rng, shape, oriented_band(shape, fine_center, 0.12 * math.pi, theta, 0.25))
    coarse = _shaped_noise(rng, shape, lowpass_gain(shape, coarse_cutoff))
    return fine_weight * fine + (1 - fine_weight) * coarse


def to_unit_range(image: np.ndarray, spread: float = 6.0) -> np.ndarray:
    """Map a zero-mean, unit-variance field to [0, 1] with a fixed affine map."""
    return np.clip(0.5 + image / spread, 0.0, 1.0)


def write_fine_coarse_dataset(root, classes: int = 4, images_per_class: int = 2, size: int = 128,
                              seed: int = 0, fine_weight: float = 0.6) -> dict:
    """Write PNG images under ``root/<class>/``; class k has fine orientation ``k * pi / classes``.

    The classes differ only in their high-frequency content, so blurring
    removes the statistic that separates them. Returns class -> file list.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    written = {}
    for k in range(classes):
        label = f"c{k:02d}"
        folder = root / label
        folder.mkdir(parents=True, exist_ok=True)
        files = []
        for i in range(images_per_class):
            img = fine_coarse_image(rng, (size, size), k * math.pi / classes, fine_weight)
            path = folder / f"img{i:02d}.png"
            imageio.save_grayscale(path, to_unit_range(img))
            files.append(path)
        written[label] = files
    return written


def write_separable_dataset(root, classes: int = 3, images_per_class: int = 2, size: int = 128,
                            seed: int = 0) -> dict:
    """Classes with well separated spectra (different radial bands); easy to retrieve."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    centers = np.linspace(0.15 * math.pi, 0.8 * math.pi, classes)
    written = {}
    for k, center in enumerate(centers):
        label = f"s{k:02d}"
        folder = root / label
        folder.mkdir(parents=True, exist_ok=True)
        files = []
        for i in range(images_per_class):
            wy, wx = frequency_grid(size, size)
            gain = np.exp(-((np.hypot(wy, wx) - center) ** 2) / (2 * (0.05 * math.pi) ** 2))
            path = folder / f"img{i:02d}.png"
            imageio.save_grayscale(path, to_unit_range(_shaped_noise(rng, (size, size), gain)))
            files.append(path)
        written[label] = files
    return written


def narrowband_noise(rng, shape, center: float, theta: float = 0.0, bandwidth: float = 0.02 * math.pi) -> np.ndarray:
    """Gaussian noise confined to a narrow band around frequency ``center`` at angle ``theta``.

    Its envelope varies slowly, so a band-pass modulus matched to the band
    stays close to Rayleigh even after local averaging.
    """
    wy, wx = frequency_grid(*shape)
    u = np.cos(theta) * wx + np.sin(theta) * wy
    v = -np.sin(theta) * wx + np.cos(theta) * wy
    gain = np.exp(-((np.abs(u) - center) ** 2 + v ** 2) / (2 * bandwidth ** 2))
    return _shaped_noise(rng, shape, gain)
