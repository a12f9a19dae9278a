"""Patch rotation about the patch center"""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from app.imaging.raster import PatchSamples

_QUARTER = math.pi / 2
_FOOTPRINT_SLACK = 1e-9


def quarter_turns(angle: float):
    """Number of quarter turns when angle is a multiple of pi/2, else None."""
    turns = angle / _QUARTER
    nearest = round(turns)
    if abs(turns - nearest) < 1e-9:
        return int(nearest) % 4
    return None


def source_offsets(side: int, angle: float):
    """Source (row, col) offsets sampled by each output pixel, centered on the patch."""
    half = (side - 1) / 2.0
    r, c = np.mgrid[0:side, 0:side].astype(np.float64) - half
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    return r * cos_a + c * sin_a, -r * sin_a + c * cos_a


def rotate_resample(samples: PatchSamples, angle: float) -> PatchSamples:
    """Rotate a patch counter-clockwise (as displayed) by angle.

    Quarter turns permute indices exactly; other angles use bilinear
    resampling and mark samples whose source leaves the footprint invalid.
    """
    turns = quarter_turns(angle)
    if turns is not None:
        if turns == 0:
            return samples
        return PatchSamples(
            values=np.rot90(samples.values, turns, axes=(0, 1)).copy(),
            known=np.rot90(samples.known, turns).copy(),
            valid=np.rot90(samples.valid, turns).copy(),
        )

    side = samples.side
    half = (side - 1) / 2.0
    src_r, src_c = source_offsets(side, angle)
    inside = (np.abs(src_r) <= half + _FOOTPRINT_SLACK) & (np.abs(src_c) <= half + _FOOTPRINT_SLACK)
    coords = np.stack([src_r + half, src_c + half])

    values = np.empty_like(samples.values)
    for channel in range(3):
        values[..., channel] = ndimage.map_coordinates(
            samples.values[..., channel], coords, order=1, mode="nearest"
        )
    usable = ndimage.map_coordinates(
        samples.usable.astype(np.float64), coords, order=1, mode="constant", cval=0.0
    )
    # A resampled value is known only if every bilinear contributor was.
    known = usable >= 1.0 - 1e-9
    return PatchSamples(values=values, known=known, valid=inside)
