"""Per-channel color histograms"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.imaging.raster import RasterImage


@dataclass(frozen=True)
class ColorHistogram:
    """Concatenated per-channel marginals, 3 * bins_per_channel entries."""

    bins_per_channel: int
    counts: np.ndarray
    empty: bool = False

    def marginal(self, channel: int) -> np.ndarray:
        """One channel's distribution, rescaled to sum to 1."""
        start = channel * self.bins_per_channel
        return 3.0 * self.counts[start:start + self.bins_per_channel]


def _select(image: RasterImage, pixels) -> np.ndarray:
    """Accept a boolean H x W selector or an (N, 2) array of (x, y) coordinates."""
    selector = np.asarray(pixels)
    if selector.dtype == bool:
        return image.pixels[selector]
    if selector.size == 0:
        return np.empty((0, 3))
    coords = selector.reshape(-1, 2).astype(np.intp)
    return image.pixels[coords[:, 1], coords[:, 0]]


def histogram_of(image: RasterImage, pixels, bins_per_channel: int) -> ColorHistogram:
    """Uniform binning of [0, 1] per channel, normalized by the pixel count."""
    if bins_per_channel < 2:
        raise ValueError(f"bins_per_channel must be >= 2, got {bins_per_channel}")
    samples = _select(image, pixels)
    counts = np.zeros(3 * bins_per_channel, dtype=np.float64)
    if samples.shape[0] == 0:
        return ColorHistogram(bins_per_channel, counts, empty=True)

    # Value 1.0 falls in the last bin.
    indices = np.minimum((samples * bins_per_channel).astype(np.intp), bins_per_channel - 1)
    for channel in range(3):
        per_channel = np.bincount(indices[:, channel], minlength=bins_per_channel)
        counts[channel * bins_per_channel:(channel + 1) * bins_per_channel] = per_channel
    # Each channel block sums to 1/3 so the whole histogram sums to 1.
    counts /= 3.0 * samples.shape[0]
    return ColorHistogram(bins_per_channel, counts)
