"""Priority-ordered exemplar fill of the remaining target region"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from app.config import PipelineConfig
from app.errors import EmptyRegionError
from app.imaging.raster import Patch, RasterImage, RegionMask
from app.imaging.windows import fully_known_centers
from app.texture.exemplar import best_exemplar
from app.texture.priority import compute_priorities, target_patch

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int], None]
SnapshotCallback = Callable[[int, RasterImage, RegionMask], None]


@dataclass(frozen=True)
class FillStep:
    front_pixel: Tuple[int, int]
    target: Patch
    source: Patch
    ssd: float
    confidence: float
    filled: int


@dataclass
class FillResult:
    image: RasterImage
    mask: RegionMask
    confidence: np.ndarray
    iterations: int


def initial_confidence(mask: RegionMask) -> np.ndarray:
    """1 on known pixels, 0 on the target region."""
    return mask.known.astype(np.float64)


def fill_step(
    image: RasterImage,
    mask: RegionMask,
    confidence: np.ndarray,
    cfg: PipelineConfig,
) -> Tuple[RasterImage, RegionMask, np.ndarray, FillStep]:
    """Copy one exemplar into the unknown pixels of the highest-priority patch."""
    front = compute_priorities(image, mask, confidence, cfg.patch_size, cfg.priority_epsilon)
    if len(front) == 0:
        raise EmptyRegionError("fill front is empty but unknown pixels remain")
    index = front.best()
    pixel = tuple(int(v) for v in front.pixels[index])
    target = target_patch(pixel, cfg.patch_size, image.width, image.height)
    known_centers = fully_known_centers(mask.inside, target.half_extent)
    source, ssd = best_exemplar(image, mask, target, cfg, known_centers)

    unknown = mask.inside[target.rows, target.cols]
    pixels = image.pixels.copy()
    region = pixels[target.rows, target.cols]
    region[unknown] = image.pixels[source.rows, source.cols][unknown]
    pixels[target.rows, target.cols] = region

    value = float(front.confidence[index])
    updated = confidence.copy()
    block = updated[target.rows, target.cols]
    block[unknown] = value
    updated[target.rows, target.cols] = block

    filled = np.zeros(mask.shape, dtype=bool)
    filled[target.rows, target.cols] = unknown
    step = FillStep(
        front_pixel=pixel,
        target=target,
        source=source,
        ssd=ssd,
        confidence=value,
        filled=int(unknown.sum()),
    )
    return image.with_pixels(pixels), mask.with_filled(filled), updated, step


def fill_all(
    image: RasterImage,
    mask: RegionMask,
    confidence: Optional[np.ndarray],
    cfg: PipelineConfig,
    progress: Optional[ProgressCallback] = None,
    snapshot: Optional[SnapshotCallback] = None,
) -> FillResult:
    """Repeat fill steps until the target region is empty."""
    mask.check_matches(image)
    if confidence is None:
        confidence = initial_confidence(mask)
    budget = mask.unknown_count
    iterations = 0
    while not mask.is_empty:
        if iterations >= budget:
            raise RuntimeError("fill did not terminate within the unknown-pixel budget")
        image, mask, confidence, step = fill_step(image, mask, confidence, cfg)
        iterations += 1
        logger.debug(
            "Fill %d: front %s <- %s (ssd %.4f, C %.4f, %d px)",
            iterations, step.front_pixel, step.source.center, step.ssd, step.confidence, step.filled,
        )
        if progress is not None:
            progress(iterations, mask.unknown_count)
        if snapshot is not None and cfg.snapshot_every and iterations % cfg.snapshot_every == 0:
            snapshot(iterations, image, mask)
    logger.info("Texture fill finished in %d iterations", iterations)
    return FillResult(image=image, mask=mask, confidence=confidence, iterations=iterations)
