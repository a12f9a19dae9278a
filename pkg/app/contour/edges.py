"""Masked first-derivative-of-Gaussian edge strength"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from app.config import PipelineConfig
from app.imaging.raster import RasterImage, RegionMask

logger = logging.getLogger(__name__)

# Responses below this are treated as exact zeros (cancellation residue).
_ZERO = 1e-12


@dataclass(frozen=True)
class EdgeStrengthField:
    """Per-pixel strength in [0, 1] and gradient orientation in [0, pi)."""

    strength: np.ndarray
    orientation: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.strength.shape


def gaussian_kernels(sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Sampled Gaussian (unit sum) and its x-derivative, truncated at 4 sigma."""
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    # Correlation kernel: positive response where intensity increases with x.
    dg = x * g / (sigma * sigma)
    return g, dg


def _correlate(plane: np.ndarray, along_x: np.ndarray, along_y: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(plane, along_x, axis=1, mode="constant", cval=0.0)
    return ndimage.correlate1d(out, along_y, axis=0, mode="constant", cval=0.0)


def visible_mass(weight: np.ndarray, sigma: float) -> np.ndarray:
    """Fraction of the derivative kernels' absolute mass on visible samples."""
    g, dg = gaussian_kernels(sigma)
    abs_dg = np.abs(dg)
    full_mass = abs_dg.sum() * g.sum()
    mass_x = _correlate(weight, abs_dg, g) / full_mass
    mass_y = _correlate(weight, g, abs_dg) / full_mass
    return np.minimum(mass_x, mass_y)


def masked_gradient(plane: np.ndarray, weight: np.ndarray, sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian-derivative gradient that never reads zero-weight samples.

    The response is sum_q w(q) K(p - q) (I(q) - I(p)), renormalized by the
    fraction of absolute kernel mass that lands on visible samples.
    """
    g, dg = gaussian_kernels(sigma)
    abs_dg = np.abs(dg)
    full_mass = abs_dg.sum() * g.sum()

    weighted = plane * weight
    gx = _correlate(weighted, dg, g) - plane * _correlate(weight, dg, g)
    gy = _correlate(weighted, g, dg) - plane * _correlate(weight, g, dg)

    mass_x = _correlate(weight, abs_dg, g) / full_mass
    mass_y = _correlate(weight, g, abs_dg) / full_mass
    with np.errstate(divide="ignore", invalid="ignore"):
        gx = np.where(mass_x > _ZERO, gx / mass_x, 0.0)
        gy = np.where(mass_y > _ZERO, gy / mass_y, 0.0)
    gx[np.abs(gx) < _ZERO] = 0.0
    gy[np.abs(gy) < _ZERO] = 0.0
    return gx, gy


def edge_strength(image: RasterImage, mask: RegionMask, cfg: PipelineConfig) -> EdgeStrengthField:
    """Channel-weighted gradient magnitude over the known region, max-normalized."""
    mask.check_matches(image)
    weight = mask.known.astype(np.float64)

    strength = np.zeros(image.shape, dtype=np.float64)
    sum_gx = np.zeros(image.shape, dtype=np.float64)
    sum_gy = np.zeros(image.shape, dtype=np.float64)
    for channel, channel_weight in enumerate(cfg.channel_weights):
        if channel_weight == 0:
            continue
        gx, gy = masked_gradient(image.pixels[..., channel], weight, cfg.sigma)
        strength += channel_weight * np.hypot(gx, gy)
        sum_gx += channel_weight * gx
        sum_gy += channel_weight * gy

    strength[mask.inside] = 0.0
    strength[strength < _ZERO] = 0.0
    # Normalize by pixels whose support is fully visible so that the mask
    # cannot rescale the field away from the target region.
    unclipped = (visible_mass(weight, cfg.sigma) >= 1.0 - 1e-9) & mask.known
    peak = strength[unclipped].max() if unclipped.any() else 0.0
    if peak <= 0:
        peak = strength.max()
    if peak > 0:
        strength = np.minimum(strength / peak, 1.0)

    sum_gx[np.abs(sum_gx) < _ZERO] = 0.0
    sum_gy[np.abs(sum_gy) < _ZERO] = 0.0
    orientation = np.mod(np.arctan2(sum_gy, sum_gx), math.pi)
    orientation[orientation >= math.pi] = 0.0
    orientation[mask.inside] = 0.0

    logger.debug("Edge strength: sigma=%s, %d non-zero pixels", cfg.sigma, int((strength > 0).sum()))
    return EdgeStrengthField(strength=strength, orientation=orientation)
