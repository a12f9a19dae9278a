import math

import numpy as np
import pytest

from app.errors import SourceExhaustedError
from app.imaging.raster import Patch, RasterImage, RegionMask
from app.pipeline.fixtures import generate_fixture
from app.texture.exemplar import best_exemplar, search_centers
from app.texture.filler import fill_all, initial_confidence
from app.texture.priority import compute_priorities, known_gradient


def _psnr(first: np.ndarray, second: np.ndarray) -> float:
    mse = float(np.mean((first - second) ** 2))
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


def _right_half_mask(size=32):
    inside = np.zeros((size, size), dtype=bool)
    inside[:, size // 2:] = True
    return RegionMask(inside)


def test_flat_texture_has_no_data_term(gray, cfg):
    mask = _right_half_mask()
    image = gray(np.full((32, 32), 0.3))

    front = compute_priorities(image, mask, initial_confidence(mask), cfg.patch_size)

    assert len(front) == 32
    assert not front.data.any()
    assert np.allclose(front.priority, cfg.priority_epsilon * front.confidence)


def test_initial_confidence_is_known_share_of_the_patch(gray, cfg):
    mask = _right_half_mask()
    front = compute_priorities(gray(np.zeros((32, 32))), mask, initial_confidence(mask), cfg.patch_size)

    row = np.flatnonzero((front.pixels[:, 0] == 15) & (front.pixels[:, 1] == 16))[0]
    assert front.confidence[row] == pytest.approx(45 / 81)


def test_isophote_hitting_the_front_wins(gray, cfg):
    plane = np.zeros((32, 32))
    plane[16:, :] = 1.0
    mask = _right_half_mask()

    front = compute_priorities(gray(plane), mask, initial_confidence(mask), cfg.patch_size)

    assert tuple(front.pixels[front.best()]) == (15, 15)
    on_edge = np.isin(front.pixels[:, 1], (15, 16))
    assert front.priority[on_edge].min() > front.priority[~on_edge].max()


def test_known_gradient_never_reads_the_target_region(gray):
    plane = np.zeros((8, 8))
    inside = np.zeros((8, 8), dtype=bool)
    inside[:, 4:] = True
    plane[:, 4:] = 1.0
    gx, gy = known_gradient(gray(plane), RegionMask(inside))
    assert not gx.any() and not gy.any()


def test_constant_image_picks_the_first_source(gray, cfg):
    inside = np.zeros((32, 32), dtype=bool)
    inside[14:17, 14:17] = True
    mask = RegionMask(inside)
    target = Patch.of_side((13, 15), cfg.patch_size)

    source, ssd = best_exemplar(gray(np.full((32, 32), 0.7)), mask, target, cfg)

    assert source.center == (4, 4)
    assert ssd == 0.0


def test_known_target_matches_a_duplicate_elsewhere(gray, cfg):
    xs = np.arange(48)
    image = gray(np.tile(np.where((xs // 8) % 2 == 0, 0.85, 0.15), (48, 1)))
    inside = np.zeros((48, 48), dtype=bool)
    inside[30:34, 30:34] = True
    target = Patch.of_side((10, 10), cfg.patch_size)

    source, ssd = best_exemplar(image, RegionMask(inside), target, cfg)

    assert ssd == 0.0
    assert source.center == (10, 4)
    assert np.array_equal(image.pixels[source.rows, source.cols], image.pixels[target.rows, target.cols])


def test_search_centers_exclude_the_target_and_thin_out_far_away():
    known = np.ones((40, 40), dtype=bool)
    target = Patch((10, 10), 1)
    centers = search_centers(known, target, search_stride=1, near_radius=5)

    assert not ((centers[:, 0] == 10) & (centers[:, 1] == 10)).any()
    far = np.maximum(np.abs(centers[:, 0] - 10), np.abs(centers[:, 1] - 10)) > 5
    assert (centers[far] % 2 == 0).all()
    assert len(centers) < 40 * 40


def test_no_fully_known_patch_raises(gray, cfg):
    inside = np.zeros((12, 12), dtype=bool)
    inside[6, 6] = True
    target = Patch.of_side((6, 5), cfg.patch_size).clamped(12, 12)
    with pytest.raises(SourceExhaustedError, match="source region exhausted"):
        best_exemplar(gray(np.full((12, 12), 0.5)), RegionMask(inside), target, cfg)


def test_empty_target_region_is_a_no_op(gray, cfg, empty_mask):
    image = gray(np.full((32, 32), 0.2))
    result = fill_all(image, empty_mask, None, cfg)
    assert result.iterations == 0
    assert result.image is image


def test_single_pixel_fill(gray, cfg):
    inside = np.zeros((32, 32), dtype=bool)
    inside[16, 16] = True
    plane = np.full((32, 32), 0.6)
    plane[16, 16] = 0.0
    mask = RegionMask(inside)

    result = fill_all(gray(plane), mask, initial_confidence(mask), cfg)

    assert result.iterations == 1
    assert np.allclose(result.image.pixels[16, 16], 0.6)
    assert result.confidence[16, 16] == pytest.approx(80 / 81)
    assert result.mask.is_empty


def test_checkerboard_fill_continues_the_phase(cfg):
    scene = generate_fixture("checkerboard", 64, seed=3)
    result = fill_all(scene.image, scene.mask, None, cfg)
    assert np.array_equal(result.image.pixels, scene.truth.pixels)


def test_two_region_fill_restores_the_boundary(cfg):
    scene = generate_fixture("two-region", 64, seed=0)
    result = fill_all(scene.image, scene.mask, None, cfg)

    assert _psnr(result.image.pixels, scene.truth.pixels) >= 30.0
    row = scene.meta["boundary_row"]
    columns = np.flatnonzero(scene.mask.inside.any(axis=0))
    for col in columns:
        bright = np.flatnonzero(result.image.pixels[:, col, 0] > 0.5)
        assert abs(int(bright[0]) - row) <= 1


@pytest.mark.parametrize("seed", range(50))
def test_random_masks_fill_completely(seed, cfg):
    rng = np.random.default_rng(seed)
    image = RasterImage(rng.random((40, 40, 3)))
    inside = rng.random((40, 40)) < 0.01
    inside[20, 20] = True
    mask = RegionMask(inside)

    result = fill_all(image, mask, None, cfg)

    assert result.mask.is_empty
    assert 1 <= result.iterations <= mask.unknown_count
    assert np.array_equal(result.image.pixels[~inside], image.pixels[~inside])
    assert np.all(result.confidence[inside] < 1.0)
