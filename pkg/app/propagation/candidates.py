"""Source patch candidates near the fill front, pre-rotated"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import ndimage

from app.config import PipelineConfig
from app.imaging.raster import Patch, PatchSamples, RasterImage, RegionMask
from app.imaging.rotation import rotate_resample
from app.imaging.windows import fully_known_centers

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    """Candidate patches with every rotation precomputed.

    Labels are numbered candidate-major: label = t * len(rotations) + r.
    """

    centers: np.ndarray  # (m, 2) int (x, y)
    rotations: Tuple[float, ...]
    values: np.ndarray  # (R, m, l, l, 3)
    valid: np.ndarray  # (R, m, l, l) bool

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def label_count(self) -> int:
        return self.size * len(self.rotations)

    def split(self, label: int) -> Tuple[int, int]:
        """(candidate index, rotation index) of a label."""
        return divmod(int(label), len(self.rotations))

    def placed(self, label: int) -> Tuple[np.ndarray, np.ndarray]:
        t, r = self.split(label)
        return self.values[r, t], self.valid[r, t]


def candidate_centers(
    mask: RegionMask,
    cfg: PipelineConfig,
    chains: Iterable[np.ndarray] = (),
) -> np.ndarray:
    """Fully-known centers on a stride grid within the band, plus structure-chain pixels.

    Every pair of centers is at least the candidate stride apart (Chebyshev).
    """
    half = cfg.half_extent
    usable = fully_known_centers(mask.inside, half)
    if mask.is_empty:
        distance = np.full(mask.shape, np.inf)
    else:
        distance = ndimage.distance_transform_edt(mask.known)
    in_band = usable & (distance <= cfg.band_width)

    stride = cfg.candidate_stride
    reach = stride - 1
    chosen = np.zeros(mask.shape, dtype=bool)
    # Chain pixels go first, thinned to the stride; grid centers fill the rest.
    for chain in chains:
        for x, y in np.asarray(chain, dtype=np.intp).reshape(-1, 2):
            if not (0 <= y < mask.height and 0 <= x < mask.width and usable[y, x]):
                continue
            if chosen[max(0, y - reach):y + reach + 1, max(0, x - reach):x + reach + 1].any():
                continue
            chosen[y, x] = True
    near_chain = ndimage.maximum_filter(chosen, size=2 * reach + 1, mode="constant")
    grid = np.zeros(mask.shape, dtype=bool)
    grid[half::stride, half::stride] = True
    chosen |= in_band & grid & ~near_chain

    ys, xs = np.nonzero(chosen)
    if ys.size > cfg.m_max:
        # Keep the ones nearest the front; row-major order breaks ties.
        order = np.lexsort((xs, ys, distance[ys, xs]))[:cfg.m_max]
        keep = np.sort(order)
        ys, xs = ys[keep], xs[keep]
        logger.warning("Candidate band truncated to %d patches", cfg.m_max)
    return np.stack([xs, ys], axis=1).astype(np.intp) if ys.size else np.empty((0, 2), dtype=np.intp)


def collect_candidates(
    image: RasterImage,
    mask: RegionMask,
    cfg: PipelineConfig,
    chains: Iterable[np.ndarray] = (),
    rotations: Optional[Tuple[float, ...]] = None,
) -> CandidateSet:
    mask.check_matches(image)
    rotations = tuple(rotations if rotations is not None else cfg.rotations)
    centers = candidate_centers(mask, cfg, chains)
    side = cfg.patch_size
    m = centers.shape[0]
    values = np.zeros((len(rotations), m, side, side, 3))
    valid = np.zeros((len(rotations), m, side, side), dtype=bool)
    full = np.ones((side, side), dtype=bool)
    for t, (x, y) in enumerate(centers):
        patch = Patch((int(x), int(y)), cfg.half_extent)
        samples = PatchSamples(
            values=image.pixels[patch.rows, patch.cols].copy(), known=full, valid=full
        )
        for r, angle in enumerate(rotations):
            rotated = rotate_resample(samples, angle)
            values[r, t] = rotated.values
            valid[r, t] = rotated.usable
    logger.info("Collected %d candidate patches x %d rotations", m, len(rotations))
    return CandidateSet(centers=centers, rotations=rotations, values=values, valid=valid)
