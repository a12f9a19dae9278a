"""Feathered pasting of decoded patches into the target region"""
from __future__ import annotations

import logging
from typing import Sequence, Tuple

import numpy as np

from app.imaging.raster import Patch, RasterImage, RegionMask
from app.propagation.candidates import CandidateSet
from app.propagation.message_passing import Assignment

logger = logging.getLogger(__name__)


def tent_weights(half: int) -> np.ndarray:
    """Separable linear ramp, highest at the patch center and positive at the rim."""
    ramp = half + 1 - np.abs(np.arange(-half, half + 1, dtype=np.float64))
    return ramp[:, None] * ramp[None, :]


def blend_patches(
    image: RasterImage,
    mask: RegionMask,
    confidence: np.ndarray,
    centers: Sequence[Tuple[int, int]],
    assignments: Sequence[Assignment],
    candidates: CandidateSet,
    structure_confidence: float = 0.9,
) -> Tuple[RasterImage, RegionMask, np.ndarray]:
    """Paste each anchor's rotated source patch, feathering overlaps, into unknown pixels only.

    Written pixels become known; their confidence is structure_confidence
    times the mean confidence of the source patches that covered them.
    """
    mask.check_matches(image)
    if not assignments:
        return image, mask, confidence
    side = candidates.values.shape[2]
    half = (side - 1) // 2
    weights = tent_weights(half)
    height, width = mask.shape

    value_sum = np.zeros((height, width, 3))
    weight_sum = np.zeros((height, width))
    confidence_sum = np.zeros((height, width))
    contributors = np.zeros((height, width), dtype=np.intp)
    single = np.zeros((height, width, 3))

    for assignment in sorted(assignments, key=lambda a: a.anchor):
        t, _ = candidates.split(assignment.global_label)
        values, valid = candidates.placed(assignment.global_label)
        source = Patch(tuple(candidates.centers[t]), half)
        source_confidence = float(confidence[source.rows, source.cols].mean())

        target = Patch(centers[assignment.anchor], half)
        rows, cols = target.rows, target.cols
        writable = valid & mask.inside[rows, cols]
        w = np.where(writable, weights, 0.0)
        value_sum[rows, cols] += w[..., None] * values
        weight_sum[rows, cols] += w
        confidence_sum[rows, cols] += w * structure_confidence * source_confidence
        contributors[rows, cols] += writable
        single[rows, cols] = np.where(writable[..., None], values, single[rows, cols])

    written = weight_sum > 0
    pixels = image.pixels.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        blended = value_sum / weight_sum[..., None]
        seeded = confidence_sum / weight_sum
    lone = contributors == 1
    pixels[written] = np.where(lone[written][:, None], single[written], blended[written])
    pixels = np.clip(pixels, 0.0, 1.0)

    updated = confidence.copy()
    updated[written] = np.clip(seeded[written], 0.0, 1.0)
    logger.info("Structure propagation wrote %d target pixels", int(written.sum()))
    return image.with_pixels(pixels), mask.with_filled(written), updated
