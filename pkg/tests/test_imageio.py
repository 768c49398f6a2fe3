import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from scatret import imageio
from scatret.imageio import (D2_OFFSETS, ImageError, PatchSet, downscale_half, extract_patches,
                             five_window_offsets, gaussian_blur, grid_offsets, list_dataset,
                             load_grayscale, normalize_patch, save_grayscale)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_binary_pgm_decodes_8bit_scale(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0]))
    np.testing.assert_array_equal(load_grayscale(path), [[0.0, 1.0], [1.0, 0.0]])


def test_missing_file():
    with pytest.raises(FileNotFoundError, match="file not found"):
        load_grayscale("/nonexistent/texture.png")


def test_png_single_pixel(tmp_path):
    path = tmp_path / "g.png"
    Image.fromarray(np.array([[128]], dtype=np.uint8), mode="L").save(path)
    assert load_grayscale(path)[0, 0] == 128 / 255


def test_rgb_uses_bt601_weights(tmp_path):
    path = tmp_path / "c.png"
    Image.fromarray(np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8), mode="RGB").save(path)
    np.testing.assert_allclose(load_grayscale(path)[0], [0.299, 0.587, 0.114], atol=1e-12)


def test_unsupported_and_unreadable(tmp_path):
    bmp = tmp_path / "x.bmp"
    bmp.write_bytes(b"BM")
    with pytest.raises(ImageError, match="unsupported"):
        load_grayscale(bmp)
    junk = tmp_path / "x.png"
    junk.write_bytes(b"not an image")
    with pytest.raises(ImageError, match="unreadable"):
        load_grayscale(junk)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_save_load_roundtrip(tmp_path, suffix, rng):
    img = np.round(rng.random((5, 7)) * 255) / 255
    save_grayscale(tmp_path / f"r{suffix}", img)
    np.testing.assert_allclose(load_grayscale(tmp_path / f"r{suffix}"), img, atol=1e-12)


def test_grid_patching_of_512_image():
    img = np.arange(512 * 512, dtype=float).reshape(512, 512)
    patches = extract_patches(img, 128, grid_offsets(img.shape, 128))
    assert len(patches) == 16 and all(p.shape == (128, 128) for p in patches)


def test_five_window_layout():
    img = np.zeros((480, 640))
    offsets = five_window_offsets(img.shape, 256)
    assert offsets == D2_OFFSETS
    assert len(extract_patches(img, 256, offsets)) == 5


def test_empty_offsets():
    assert extract_patches(np.zeros((8, 8)), 4, []) == []


def test_patches_are_copies():
    img = np.zeros((4, 4))
    patch = extract_patches(img, 2, [(0, 0)])[0]
    patch[:] = 7
    assert img.sum() == 0


def test_patch_errors():
    img = np.zeros((8, 8))
    with pytest.raises(ImageError, match="out of bounds"):
        extract_patches(img, 4, [(6, 0)])
    with pytest.raises(ImageError, match="exceeds"):
        extract_patches(img, 9, [(0, 0)])


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 6), st.data())
def test_full_cover_tiles_partition_the_image(rows, cols, size, data):
    img = data.draw(arrays(np.float64, (rows * size, cols * size), elements=finite))
    patches = extract_patches(img, size, grid_offsets(img.shape, size))
    joined = np.concatenate([p.ravel() for p in patches])
    np.testing.assert_array_equal(np.sort(joined), np.sort(img.ravel()))


def test_normalize_two_samples():
    np.testing.assert_allclose(normalize_patch([[3.0, 5.0]]), [[-1 / math.sqrt(2), 1 / math.sqrt(2)]],
                               atol=1e-15)


def test_normalize_constant_patch():
    with pytest.raises(ImageError, match="zero-energy patch"):
        normalize_patch(np.full((4, 4), 0.3))


nonconstant = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(2, 12)), elements=finite).filter(
    lambda a: np.ptp(a) > 1e-6 * max(1.0, np.abs(a).max()))


@given(nonconstant)
def test_normalize_mean_and_energy(patch):
    out = normalize_patch(patch)
    assert abs(out.mean()) <= 1e-12
    assert abs(np.sum(out * out) - 1) <= 1e-12


@given(nonconstant)
def test_normalize_idempotent(patch):
    once = normalize_patch(patch)
    np.testing.assert_allclose(normalize_patch(once), once, atol=1e-12)


def test_downscale_examples():
    np.testing.assert_array_equal(downscale_half([[0.0, 1.0], [1.0, 0.0]]), [[0.5]])
    np.testing.assert_array_equal(downscale_half(np.full((6, 4), 2.5)), np.full((3, 2), 2.5))
    ramp = np.arange(16, dtype=float).reshape(4, 4)
    # block means computed by hand: (0+1+4+5)/4, (2+3+6+7)/4, ...
    np.testing.assert_array_equal(downscale_half(ramp), [[2.5, 4.5], [10.5, 12.5]])
    with pytest.raises(ImageError, match="odd"):
        downscale_half(np.zeros((3, 4)))


def test_blur_identity_and_constant(rng):
    img = rng.random((16, 12))
    out = gaussian_blur(img, 0)
    np.testing.assert_array_equal(out, img)
    assert out is not img
    np.testing.assert_allclose(gaussian_blur(np.full((10, 10), 0.7), 2.3), 0.7, atol=1e-12)
    with pytest.raises(ValueError):
        gaussian_blur(img, -1)


def test_blur_impulse_matches_sampled_gaussian():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    out = gaussian_blur(img, 1.0)
    d = np.arange(-4, 5)
    ref = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / 2.0)
    ref /= ref.sum()
    expected = np.zeros((21, 21))
    expected[6:15, 6:15] = ref
    np.testing.assert_allclose(out, expected, atol=1e-14)


def test_blur_wider_than_image_wraps(rng):
    img = rng.random((6, 6))
    np.testing.assert_allclose(gaussian_blur(img, 5.0).mean(), img.mean(), atol=1e-12)


@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 10)), elements=finite),
       st.floats(0, 6))
def test_blur_preserves_mean(img, sigma):
    assert abs(gaussian_blur(img, sigma).mean() - img.mean()) <= 1e-9


def test_patchset_invariants():
    PatchSet([np.zeros((2, 2))] * 2, "bark", "img0")
    with pytest.raises(ValueError):
        PatchSet([np.zeros((2, 2))], "", "img0")
    with pytest.raises(ValueError, match="mixed"):
        PatchSet([np.zeros((2, 2)), np.zeros((3, 3))], "bark", "img0")


def test_list_dataset(tmp_path):
    with pytest.raises(ImageError, match="no classes found"):
        list_dataset(tmp_path)
    with pytest.raises(ImageError, match="no classes found"):
        list_dataset(tmp_path / "missing")
    for cls in ("b", "a"):
        (tmp_path / cls).mkdir()
        for name in ("2.png", "1.pgm", "notes.txt"):
            (tmp_path / cls / name).write_bytes(b"")
    found = list_dataset(tmp_path)
    assert list(found) == ["a", "b"]
    assert [p.name for p in found["a"]] == ["1.pgm", "2.png"]


def test_as_grid_rejects_bad_input():
    with pytest.raises(ImageError):
        imageio.as_grid(np.zeros((0, 3)))
    with pytest.raises(ImageError):
        imageio.as_grid([[np.nan]])
    with pytest.raises(ImageError):
        imageio.as_grid(np.zeros(4))
