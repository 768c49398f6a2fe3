"""Grayscale image loading, patching and the dataset-construction transforms.

Images are carried around as 2D ``float64`` arrays of shape ``(height, width)``
(the ``ImageGrid`` of the rest of the package).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

ImageGrid = np.ndarray

BT601 = (0.299, 0.587, 0.114)
SUPPORTED_SUFFIXES = (".pgm", ".png")

# Five 256x256 windows inside a 640x480 frame: corners, then centre.
D2_OFFSETS = [(0, 0), (0, 384), (224, 0), (224, 384), (112, 192)]


class ImageError(ValueError):
    """Raised for unreadable, unsupported or degenerate images."""


def as_grid(data) -> ImageGrid:
    """Validate and convert ``data`` to a finite 2D float64 array."""
    grid = np.asarray(data, dtype=np.float64)
    if grid.ndim != 2:
        raise ImageError(f"expected a 2D grid, got shape {grid.shape}")
    if grid.shape[0] == 0 or grid.shape[1] == 0:
        raise ImageError("zero-dimension image")
    if not np.all(np.isfinite(grid)):
        raise ImageError("image contains non-finite samples")
    return grid


def load_grayscale(path) -> ImageGrid:
    """Read a PGM or PNG file as luminance values in [0, 1].

    8-bit values are divided by 255. Colour images are reduced with the
    BT.601 luma weights before scaling.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageError(f"unsupported format: {path.suffix or path.name}")
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "P":
                img = img.convert("RGBA" if "transparency" in img.info else "RGB")
                mode = img.mode
            if mode in ("L", "LA"):
                values = np.asarray(img.getchannel(0), dtype=np.float64)
            elif mode == "1":
                values = np.asarray(img.convert("L"), dtype=np.float64)
            elif mode in ("RGB", "RGBA"):
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                values = rgb @ np.asarray(BT601)
            else:
                raise ImageError(f"unsupported pixel mode {mode!r} in {path}")
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageError(f"unreadable file {path}: {exc}") from exc
    if values.size == 0:
        raise ImageError(f"zero-dimension image: {path}")
    return as_grid(values / 255.0)


def save_grayscale(path, image: ImageGrid) -> None:
    """Write ``image`` (values in [0, 1]) as an 8-bit PNG or binary PGM."""
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageError(f"unsupported format: {path.suffix}")
    data = np.clip(np.rint(as_grid(image) * 255.0), 0, 255).astype(np.uint8)
    fmt = "PPM" if path.suffix.lower() == ".pgm" else "PNG"
    Image.fromarray(data, mode="L").save(path, format=fmt)


@dataclass(frozen=True)
class PatchSet:
    """Patches cut from one source image, all belonging to one texture class."""

    patches: list = field(repr=False)
    class_label: str
    source_id: str

    def __post_init__(self):
        if not self.class_label:
            raise ValueError("class_label must be non-empty")
        shapes = {np.shape(p) for p in self.patches}
        if len(shapes) > 1:
            raise ValueError(f"patches of mixed sizes: {sorted(shapes)}")


def grid_offsets(shape, patch_size: int) -> list[tuple[int, int]]:
    """Row-major offsets of the non-overlapping tiles that fit in ``shape``."""
    height, width = shape
    return [
        (r, c)
        for r in range(0, height - patch_size + 1, patch_size)
        for c in range(0, width - patch_size + 1, patch_size)
    ]


def five_window_offsets(shape, window: int) -> list[tuple[int, int]]:
    """Corner and centre offsets of a square window (the D2 layout)."""
    height, width = shape
    if window > height or window > width:
        raise ImageError(f"window {window} exceeds image {width}x{height}")
    bottom, right = height - window, width - window
    return [(0, 0), (0, right), (bottom, 0), (bottom, right), (bottom // 2, right // 2)]


def extract_patches(image: ImageGrid, patch_size: int, offsets) -> list[ImageGrid]:
    image = as_grid(image)
    height, width = image.shape
    if patch_size <= 0:
        raise ValueError("patch_size must be positive")
    if patch_size > height or patch_size > width:
        raise ImageError(f"patch_size {patch_size} exceeds image {width}x{height}")
    patches = []
    for row, col in offsets:
        if row < 0 or col < 0 or row + patch_size > height or col + patch_size > width:
            raise ImageError(f"offset ({row}, {col}) out of bounds for patch_size {patch_size}")
        patches.append(image[row:row + patch_size, col:col + patch_size].copy())
    return patches


def normalize_patch(patch: ImageGrid) -> ImageGrid:
    """Remove the mean and scale to unit energy (sum of squares = 1)."""
    patch = as_grid(patch)
    if patch.size < 2:
        raise ImageError("patch needs at least 2 samples")
    centred = patch - patch.mean()
    energy = float(np.sum(centred * centred))
    scale = float(np.max(np.abs(patch)))
    # rounding residue of a constant patch is ~eps * |value| per sample
    if energy <= (64 * np.finfo(float).eps * scale) ** 2 * patch.size:
        raise ImageError("zero-energy patch")
    return centred / math.sqrt(energy)


def downscale_half(image: ImageGrid) -> ImageGrid:
    """Average 2x2 blocks."""
    image = as_grid(image)
    height, width = image.shape
    if height % 2 or width % 2:
        raise ImageError(f"odd dimension {width}x{height} cannot be halved")
    return image.reshape(height // 2, 2, width // 2, 2).mean(axis=(1, 3))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 2D Gaussian on a square of radius ceil(4 sigma), summing to one."""
    radius = int(math.ceil(4 * sigma))
    d = np.arange(-radius, radius + 1, dtype=np.float64)
    r2 = d[:, None] ** 2 + d[None, :] ** 2
    # sigma**2 can underflow for tiny sigma; the kernel is then a unit impulse
    with np.errstate(over="ignore"):
        g = np.exp(-r2 / max(2 * sigma * sigma, np.finfo(float).tiny))
    return g / g.sum()


def gaussian_blur(image: ImageGrid, sigma: float) -> ImageGrid:
    """Periodic convolution with a unit-DC-gain Gaussian.

    Kernel taps that wrap past the image edge are folded back onto the
    periodic grid, so kernels wider than the image are handled exactly.
    """
    image = as_grid(image)
    if sigma < 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be a nonnegative real, got {sigma}")
    if sigma == 0:
        return image.copy()
    kernel = gaussian_kernel(sigma)
    radius = kernel.shape[0] // 2
    height, width = image.shape
    folded = np.zeros_like(image)
    d = np.arange(-radius, radius + 1)
    np.add.at(folded, (d[:, None] % height, d[None, :] % width), kernel)
    return np.real(np.fft.ifft2(np.fft.fft2(image) * np.fft.fft2(folded)))


def list_dataset(root) -> dict[str, list[Path]]:
    """Map class name -> sorted image files, one class per subdirectory."""
    root = Path(root)
    if not root.is_dir():
        raise ImageError(f"no classes found: {root} is not a directory")
    classes = {}
    for entry in sorted(os.scandir(root), key=lambda e: e.name):
        if not entry.is_dir():
            continue
        files = sorted(
            p for p in Path(entry.path).iterdir()
            if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES
        )
        if files:
            classes[entry.name] = files
    if not classes:
        raise ImageError(f"no classes found under {root}")
    return classes
