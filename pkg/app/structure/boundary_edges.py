"""Collect contour stubs that run into the target region"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from skimage import draw, measure

from app.config import PipelineConfig
from app.contour.hierarchy import Contour, ContourHierarchy, contours_at_threshold
from app.imaging.histogram import ColorHistogram, histogram_of
from app.imaging.raster import RasterImage, RegionMask

logger = logging.getLogger(__name__)

# Chain ends this close to the target region (Euclidean, px) count as contacts.
_CONTACT_RADIUS = 2.5


@dataclass(frozen=True)
class BoundaryEdge:
    """A contour stub in the known region whose last pixel borders the target region."""

    id: int
    contour_id: int
    pixel_chain: np.ndarray  # (N, 2) int (x, y), travelling toward the target region
    samples: np.ndarray  # (M, 2) float, chain resampled at fixed spacing, last = hit
    strength: float
    boundary_position: float
    flank_histograms: Tuple[ColorHistogram, ColorHistogram]
    exposed_at: float

    @property
    def hit(self) -> Tuple[int, int]:
        x, y = self.pixel_chain[-1]
        return int(x), int(y)

    @property
    def length(self) -> float:
        steps = np.diff(self.pixel_chain.astype(np.float64), axis=0)
        return float(np.hypot(steps[:, 0], steps[:, 1]).sum())


class BoundaryTrace:
    """Arc-length parametrisation of the target region outline, traversed once."""

    def __init__(self, mask: RegionMask):
        padded = np.pad(mask.inside.astype(np.float64), 1)
        vertices = []
        offsets = []
        total = 0.0
        for loop in measure.find_contours(padded, 0.5):
            points = loop[:, ::-1] - 1.0  # (x, y) in image coordinates
            steps = np.hypot(*np.diff(points, axis=0).T)
            cumulative = np.concatenate([[0.0], np.cumsum(steps)])
            vertices.append(points)
            offsets.append(cumulative + total)
            total += float(cumulative[-1]) + 1.0
        self.vertices = np.concatenate(vertices) if vertices else np.empty((0, 2))
        self.positions = np.concatenate(offsets) if offsets else np.empty(0)
        self.total_length = total

    def position_of(self, point: Tuple[float, float]) -> float:
        if self.vertices.shape[0] == 0:
            return 0.0
        delta = self.vertices - np.asarray(point, dtype=np.float64)
        nearest = int(np.argmin(delta[:, 0] ** 2 + delta[:, 1] ** 2))
        return float(self.positions[nearest])


def resample_chain(chain: np.ndarray, spacing: float) -> np.ndarray:
    """Points every `spacing` px of arc length, measured back from the last pixel."""
    points = chain.astype(np.float64)[::-1]
    if points.shape[0] == 1:
        return points.copy()
    steps = np.hypot(*np.diff(points, axis=0).T)
    cumulative = np.concatenate([[0.0], np.cumsum(steps)])
    stations = np.arange(0.0, cumulative[-1] + 1e-9, spacing)
    xs = np.interp(stations, cumulative, points[:, 0])
    ys = np.interp(stations, cumulative, points[:, 1])
    return np.stack([xs, ys], axis=1)[::-1]


def _cap_length(chain: np.ndarray, limit: float) -> np.ndarray:
    """Keep the last `limit` px of arc length of a chain."""
    steps = np.hypot(*np.diff(chain.astype(np.float64), axis=0).T)
    from_end = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
    return chain[from_end <= limit + 1e-9]


def _reach_boundary(chain: np.ndarray, mask: RegionMask, front: np.ndarray) -> Optional[np.ndarray]:
    """Extend a chain whose end is near the target region onto a front pixel."""
    x, y = (int(v) for v in chain[-1])
    if front[y, x]:
        return chain
    height, width = front.shape
    best = None
    radius = int(np.ceil(_CONTACT_RADIUS))
    for ty in range(max(0, y - radius), min(height, y + radius + 1)):
        for tx in range(max(0, x - radius), min(width, x + radius + 1)):
            if not front[ty, tx]:
                continue
            key = ((tx - x) ** 2 + (ty - y) ** 2, ty, tx)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    rr, cc = draw.line(y, x, best[1], best[2])
    if mask.inside[rr, cc].any():
        return None
    extension = np.stack([cc[1:], rr[1:]], axis=1)
    return np.concatenate([chain, extension]).astype(np.intp)


def front_distance(mask: RegionMask) -> np.ndarray:
    """Euclidean distance of every known pixel to the nearest target pixel."""
    if mask.is_empty:
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(mask.known)


def contour_stubs(
    contour: Contour,
    mask: RegionMask,
    cfg: PipelineConfig,
    distance: Optional[np.ndarray] = None,
) -> List[np.ndarray]:
    """Split a contour into stubs ending on the fill front, one per touching end."""
    chain = contour.pixel_chain
    if chain.shape[0] < 2 or mask.is_empty:
        return []
    if distance is None:
        distance = front_distance(mask)
    front = mask.boundary()

    def near(pixel) -> bool:
        return distance[pixel[1], pixel[0]] <= _CONTACT_RADIUS

    start_hits, end_hits = near(chain[0]), near(chain[-1])
    pieces = []
    if start_hits and end_hits:
        middle = chain.shape[0] // 2
        pieces = [chain[:middle + 1][::-1], chain[middle:]]
    elif start_hits:
        pieces = [chain[::-1]]
    elif end_hits:
        pieces = [chain]

    stubs = []
    for piece in pieces:
        reached = _reach_boundary(_cap_length(piece, cfg.stub_length), mask, front)
        if reached is not None and reached.shape[0] >= 2:
            stubs.append(reached)
    return stubs


def _flank_histograms(
    image: RasterImage,
    hierarchy: ContourHierarchy,
    contour: Contour,
    threshold: float,
    partitions: Dict[float, Tuple[np.ndarray, np.ndarray]],
    bins: int,
) -> Optional[Tuple[ColorHistogram, ColorHistogram]]:
    if threshold not in partitions:
        roots = hierarchy.roots_at(threshold)
        partitions[threshold] = (roots, roots[hierarchy.base_labels])
    roots, partition = partitions[threshold]
    histograms = []
    for base in contour.regions:
        region = partition == roots[base]
        histogram = histogram_of(image, region, bins)
        if histogram.empty:
            return None
        histograms.append(histogram)
    return histograms[0], histograms[1]


def collect_boundary_edges(
    hierarchy: ContourHierarchy,
    image: RasterImage,
    mask: RegionMask,
    cfg: PipelineConfig,
) -> List[BoundaryEdge]:
    """Sweep the threshold down to delta_t and record every stub that hits the fill front."""
    mask.check_matches(image)
    trace = BoundaryTrace(mask)
    levels = hierarchy.levels
    seen = set()
    exposed: List[Tuple[Contour, float]] = []
    step = 1
    while True:
        t = (levels - step) / levels
        if t < cfg.delta_t:
            break
        for contour in contours_at_threshold(hierarchy, t):
            if contour.id not in seen:
                seen.add(contour.id)
                exposed.append((contour, t))
        step += 1

    partitions: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
    distance = front_distance(mask)
    drafts = []
    for contour, t in exposed:
        stubs = contour_stubs(contour, mask, cfg, distance)
        if not stubs:
            continue
        flank_t = max(0.0, t - cfg.flank_depth / levels)
        flanks = _flank_histograms(image, hierarchy, contour, flank_t, partitions, cfg.bins_per_channel)
        if flanks is None:
            logger.debug("Contour %d dropped: empty flank region", contour.id)
            continue
        for stub in stubs:
            position = trace.position_of(stub[-1])
            drafts.append((position, contour.id, stub, contour.strength, flanks, t))

    drafts.sort(key=lambda item: (item[0], item[1]))
    edges = [
        BoundaryEdge(
            id=index,
            contour_id=contour_id,
            pixel_chain=stub,
            samples=resample_chain(stub, cfg.chain_spacing),
            strength=strength,
            boundary_position=position,
            flank_histograms=flanks,
            exposed_at=t,
        )
        for index, (position, contour_id, stub, strength, flanks, t) in enumerate(drafts)
    ]
    logger.info("Collected %d boundary edges from %d exposed contours", len(edges), len(exposed))
    return edges
