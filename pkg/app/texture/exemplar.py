"""Exhaustive SSD search for the best fully-known source patch"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.config import PipelineConfig
from app.errors import SourceExhaustedError
from app.imaging.raster import Patch, RasterImage, RegionMask
from app.imaging.windows import fully_known_centers

logger = logging.getLogger(__name__)

_CHUNK = 4096


def search_centers(
    known_centers: np.ndarray, target: Patch, search_stride: int, near_radius: int
) -> np.ndarray:
    """Candidate centers (x, y), row-major: stride s near the target, 2s beyond."""
    ys, xs = np.nonzero(known_centers)
    tx, ty = target.center
    near = np.maximum(np.abs(xs - tx), np.abs(ys - ty)) <= near_radius
    fine = (xs % search_stride == 0) & (ys % search_stride == 0)
    coarse = (xs % (2 * search_stride) == 0) & (ys % (2 * search_stride) == 0)
    keep = np.where(near, fine, coarse) & ~((xs == tx) & (ys == ty))
    return np.stack([xs[keep], ys[keep]], axis=1)


def patch_ssd(
    image: RasterImage, mask: RegionMask, target: Patch, centers: np.ndarray, threads: int = 1
) -> np.ndarray:
    """SSD between the target's known pixels and each candidate patch."""
    side = target.side
    half = target.half_extent
    values = image.pixels[target.rows, target.cols]
    weight = mask.known[target.rows, target.cols].astype(np.float64)
    windows = sliding_window_view(image.pixels, (side, side), axis=(0, 1))  # (H', W', 3, l, l)
    reference = values.transpose(2, 0, 1)

    def chunk_ssd(start: int) -> np.ndarray:
        block = centers[start:start + _CHUNK]
        gathered = windows[block[:, 1] - half, block[:, 0] - half]
        diff = gathered - reference[None]
        return ((diff * diff).sum(axis=1) * weight[None]).sum(axis=(1, 2))

    starts = range(0, centers.shape[0], _CHUNK)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        parts = list(executor.map(chunk_ssd, starts))
    return np.concatenate(parts) if parts else np.empty(0)


def best_exemplar(
    image: RasterImage,
    mask: RegionMask,
    target: Patch,
    cfg: PipelineConfig,
    known_centers: Optional[np.ndarray] = None,
) -> Tuple[Patch, float]:
    """Minimal-SSD fully-known patch; ties go to the smallest (y, x)."""
    mask.check_matches(image)
    if known_centers is None:
        known_centers = fully_known_centers(mask.inside, target.half_extent)
    near_radius = int(round(cfg.search_near_factor * target.side))
    centers = search_centers(known_centers, target, cfg.search_stride, near_radius)
    if centers.shape[0] == 0:
        raise SourceExhaustedError(
            f"source region exhausted: no fully-known {target.side}px patch for target at {target.center}"
        )
    ssd = patch_ssd(image, mask, target, centers, cfg.threads)
    winner = int(np.argmin(ssd))
    x, y = centers[winner]
    return Patch((int(x), int(y)), target.half_extent), float(ssd[winner])
