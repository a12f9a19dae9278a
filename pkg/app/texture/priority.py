"""Fill-front priorities: confidence times isophote data term"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from app.imaging.raster import Patch, RasterImage, RegionMask
from app.imaging.windows import box_sum


@dataclass(frozen=True)
class FillFront:
    pixels: np.ndarray  # (n, 2) int (x, y), row-major
    confidence: np.ndarray  # C(p)
    data: np.ndarray  # D(p)
    priority: np.ndarray

    def __len__(self) -> int:
        return self.pixels.shape[0]

    def best(self) -> int:
        """Highest priority; row-major order breaks ties."""
        return int(np.argmax(self.priority))


def clamped_centers(pixels: np.ndarray, half: int, width: int, height: int) -> np.ndarray:
    xs = np.clip(pixels[:, 0], half, width - 1 - half)
    ys = np.clip(pixels[:, 1], half, height - 1 - half)
    return np.stack([xs, ys], axis=1)


def known_gradient(image: RasterImage, mask: RegionMask):
    """Per-pixel gradient of the strongest channel, differencing known samples only."""
    values = image.pixels
    known = mask.known
    height, width = known.shape

    def axis_difference(axis: int) -> np.ndarray:
        forward = np.zeros_like(values)
        backward = np.zeros_like(values)
        has_forward = np.zeros(known.shape, dtype=bool)
        has_backward = np.zeros(known.shape, dtype=bool)
        if axis == 1:
            forward[:, :-1] = values[:, 1:] - values[:, :-1]
            backward[:, 1:] = values[:, 1:] - values[:, :-1]
            has_forward[:, :-1] = known[:, 1:] & known[:, :-1]
            has_backward[:, 1:] = known[:, 1:] & known[:, :-1]
        else:
            forward[:-1, :] = values[1:, :] - values[:-1, :]
            backward[1:, :] = values[1:, :] - values[:-1, :]
            has_forward[:-1, :] = known[1:, :] & known[:-1, :]
            has_backward[1:, :] = known[1:, :] & known[:-1, :]
        both = has_forward & has_backward
        out = np.where(both[..., None], (forward + backward) / 2.0, 0.0)
        out = np.where((has_forward & ~both)[..., None], forward, out)
        out = np.where((has_backward & ~both)[..., None], backward, out)
        return out

    gx = axis_difference(1)
    gy = axis_difference(0)
    strongest = np.argmax(gx * gx + gy * gy, axis=-1)
    rows, cols = np.indices((height, width))
    return gx[rows, cols, strongest], gy[rows, cols, strongest]


def front_normals(mask: RegionMask):
    """Unit normals of the target region outline (zero where undefined)."""
    inside = mask.inside.astype(np.float64)
    nx = ndimage.sobel(inside, axis=1, mode="nearest")
    ny = ndimage.sobel(inside, axis=0, mode="nearest")
    norm = np.hypot(nx, ny)
    with np.errstate(divide="ignore", invalid="ignore"):
        nx = np.where(norm > 0, nx / norm, 0.0)
        ny = np.where(norm > 0, ny / norm, 0.0)
    return nx, ny


def compute_priorities(
    image: RasterImage,
    mask: RegionMask,
    confidence: np.ndarray,
    patch_size: int,
    epsilon: float = 1e-6,
) -> FillFront:
    mask.check_matches(image)
    half = (patch_size - 1) // 2
    front = mask.boundary()
    ys, xs = np.nonzero(front)
    pixels = np.stack([xs, ys], axis=1)
    if pixels.shape[0] == 0:
        empty = np.empty(0)
        return FillFront(pixels=pixels.reshape(0, 2), confidence=empty, data=empty, priority=empty)

    known_confidence = np.where(mask.known, confidence, 0.0)
    totals = box_sum(known_confidence, half)
    centers = clamped_centers(pixels, half, mask.width, mask.height)
    c = totals[centers[:, 1], centers[:, 0]] / float(patch_size * patch_size)

    gx, gy = known_gradient(image, mask)
    nx, ny = front_normals(mask)
    # Isophote is the gradient turned by 90 degrees: (-gy, gx).
    d = np.abs(-gy[ys, xs] * nx[ys, xs] + gx[ys, xs] * ny[ys, xs])
    return FillFront(pixels=pixels, confidence=c, data=d, priority=c * d + epsilon * c)


def target_patch(pixel, patch_size: int, width: int, height: int) -> Patch:
    return Patch.of_side((int(pixel[0]), int(pixel[1])), patch_size).clamped(width, height)
