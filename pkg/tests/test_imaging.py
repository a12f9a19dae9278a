import math
from pathlib import Path

import numpy as np
import pytest

from app.errors import DimensionMismatchError, ImageIOError, PatchBoundsError
from app.imaging.histogram import histogram_of
from app.imaging.raster import Patch, PatchSamples, RasterImage, RegionMask, extract_patch
from app.imaging.rotation import rotate_resample
from app.imaging.windows import box_sum, fully_known_centers


def test_raster_rejects_out_of_range_samples():
    with pytest.raises(ValueError):
        RasterImage(np.full((4, 4, 3), 1.5))
    with pytest.raises(ValueError):
        RasterImage(np.zeros((4, 4)))


def test_extract_patch_all_known(gray):
    image = gray(np.full((8, 8), 0.3))
    mask = RegionMask(np.zeros((8, 8), dtype=bool))

    samples = extract_patch(image, mask, Patch.of_side((4, 4), 3))

    assert samples.values.shape == (3, 3, 3)
    assert samples.known.sum() == 9


def test_extract_patch_on_half_plane_front(gray):
    inside = np.zeros((8, 8), dtype=bool)
    inside[:, :4] = True
    mask = RegionMask(inside)

    samples = extract_patch(gray(np.zeros((8, 8))), mask, Patch.of_side((4, 4), 3))

    assert samples.known.sum() == 6
    assert (~samples.known).sum() == 3


def test_extract_patch_out_of_bounds_names_coordinate(gray):
    mask = RegionMask(np.zeros((8, 8), dtype=bool))
    with pytest.raises(PatchBoundsError) as excinfo:
        extract_patch(gray(np.zeros((8, 8))), mask, Patch.of_side((0, 0), 3))
    assert excinfo.value.coordinate == (-1, -1)


def test_patch_clamped_keeps_center_inside():
    patch = Patch.of_side((0, 30), 9).clamped(32, 32)
    assert patch.center == (4, 27)
    assert patch.fits(32, 32)


@pytest.mark.parametrize("side", [2, 1, 4])
def test_patch_requires_odd_side(side):
    with pytest.raises(ValueError):
        Patch.of_side((5, 5), side)


def test_mask_boundary_is_known_and_four_adjacent():
    inside = np.zeros((9, 9), dtype=bool)
    inside[4, 4] = True
    mask = RegionMask(inside)

    boundary = mask.boundary()

    assert boundary.sum() == 4
    assert not (boundary & mask.inside).any()
    assert mask.boundary_pixels() == [(4, 3), (3, 4), (5, 4), (4, 5)]


@pytest.mark.parametrize("fill", [False, True])
def test_mask_boundary_empty_for_trivial_masks(fill):
    mask = RegionMask(np.full((6, 6), fill))
    assert not mask.boundary().any()


def test_mask_dimension_check(gray):
    mask = RegionMask(np.zeros((5, 6), dtype=bool))
    with pytest.raises(DimensionMismatchError):
        mask.check_matches(gray(np.zeros((6, 6))))


def test_mask_load_treats_any_nonzero_as_target(tmp_path: Path):
    from PIL import Image

    data = np.zeros((4, 5, 3), dtype=np.uint8)
    data[1, 2, 1] = 7
    data[3, 0, 2] = 255
    path = tmp_path / "mask.png"
    Image.fromarray(data, mode="RGB").save(path)

    mask = RegionMask.load(path)

    assert mask.shape == (4, 5)
    assert mask.unknown_count == 2
    assert mask.inside[1, 2] and mask.inside[3, 0]


def test_image_save_and_load(tmp_path: Path, rng):
    levels = rng.integers(0, 256, size=(6, 7, 3)) / 255.0
    image = RasterImage(levels)
    image.save(tmp_path / "img.png")

    loaded = RasterImage.load(tmp_path / "img.png")

    assert np.array_equal(loaded.pixels, image.pixels)


def test_image_load_missing_file(tmp_path: Path):
    with pytest.raises(ImageIOError):
        RasterImage.load(tmp_path / "missing.png")


def test_histogram_mid_gray(gray):
    image = gray(np.full((4, 4), 0.5))
    histogram = histogram_of(image, np.ones((4, 4), dtype=bool), 4)

    for channel in range(3):
        assert histogram.marginal(channel) == pytest.approx([0.0, 0.0, 1.0, 0.0])
    assert histogram.counts.sum() == pytest.approx(1.0, abs=1e-9)


def test_histogram_black_and_white(gray):
    image = gray(np.array([[0.0, 1.0]]))
    histogram = histogram_of(image, np.array([[0, 0], [1, 0]]), 2)

    for channel in range(3):
        assert histogram.marginal(channel) == pytest.approx([0.5, 0.5])


def test_histogram_matches_counting_oracle(rng):
    image = RasterImage(rng.random((32, 32, 3)))
    bins = 16
    histogram = histogram_of(image, np.ones((32, 32), dtype=bool), bins)

    expected = np.zeros(3 * bins)
    for y in range(32):
        for x in range(32):
            for channel in range(3):
                value = image.pixels[y, x, channel]
                index = min(int(math.floor(value * bins)), bins - 1)
                expected[channel * bins + index] += 1
    expected /= 3 * 32 * 32

    assert np.allclose(histogram.counts, expected, atol=1e-15)
    assert histogram.counts.sum() == pytest.approx(1.0, abs=1e-9)


def test_histogram_is_order_independent(rng):
    image = RasterImage(rng.random((10, 10, 3)))
    coords = np.array([(x, y) for y in range(10) for x in range(10)])
    shuffled = coords[rng.permutation(len(coords))]

    first = histogram_of(image, coords, 8)
    second = histogram_of(image, shuffled, 8)

    assert np.array_equal(first.counts, second.counts)


def test_histogram_of_empty_set_is_flagged(gray):
    histogram = histogram_of(gray(np.zeros((3, 3))), np.zeros((3, 3), dtype=bool), 4)
    assert histogram.empty
    assert not histogram.counts.any()


def _samples(values):
    side = values.shape[0]
    full = np.ones((side, side), dtype=bool)
    return PatchSamples(values=values, known=full, valid=full)


def test_rotation_identity(rng):
    samples = _samples(rng.random((5, 5, 3)))
    rotated = rotate_resample(samples, 0.0)
    assert np.array_equal(rotated.values, samples.values)


def test_rotation_by_pi_is_an_involution(rng):
    samples = _samples(rng.random((3, 3, 3)))
    twice = rotate_resample(rotate_resample(samples, math.pi), math.pi)
    assert np.array_equal(twice.values, samples.values)


def test_quarter_turn_matches_transpose_and_flip():
    ramp = np.arange(25, dtype=np.float64).reshape(5, 5) / 24.0
    values = np.repeat(ramp[..., None], 3, axis=2)

    rotated = rotate_resample(_samples(values), math.pi / 2)

    oracle = values.transpose(1, 0, 2)[::-1]
    assert np.array_equal(rotated.values, oracle)
    assert rotated.valid.all()


def test_exact_rotations_compose_cyclically(rng):
    samples = _samples(rng.random((5, 5, 3)))
    quarter = rotate_resample(samples, math.pi / 2)
    half = rotate_resample(quarter, math.pi / 2)
    assert np.array_equal(half.values, rotate_resample(samples, math.pi).values)
    back = rotate_resample(quarter, -math.pi / 2)
    assert np.array_equal(back.values, samples.values)


def test_diagonal_rotation_marks_corners_invalid():
    values = np.full((3, 3, 3), 0.25)
    rotated = rotate_resample(_samples(values), math.pi / 4)

    assert not rotated.valid[0, 0] and not rotated.valid[2, 2]
    assert rotated.valid[1, 1] and rotated.valid[0, 1]
    assert np.allclose(rotated.values[rotated.valid], 0.25)


def test_box_sum_and_fully_known_centers():
    inside = np.zeros((7, 7), dtype=bool)
    inside[0, 0] = True
    sums = box_sum(np.ones((7, 7)), 1)
    assert sums[3, 3] == 9 and sums[0, 0] == 4

    centers = fully_known_centers(inside, 1)
    assert not centers[1, 1]
    assert centers[2, 2]
    assert not centers[0, 3]
