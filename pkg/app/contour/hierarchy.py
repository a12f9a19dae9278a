"""Watershed regions merged greedily into a threshold-indexed contour hierarchy"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import ndimage
from skimage import graph, morphology, segmentation

from app.config import PipelineConfig
from app.contour.edges import EdgeStrengthField
from app.errors import DimensionMismatchError, EmptyRegionError
from app.imaging.raster import RegionMask

logger = logging.getLogger(__name__)

_FOUR = ((0, -1), (-1, 0), (1, 0), (0, 1))
_DIAGONAL = ((-1, -1), (1, -1), (-1, 1), (1, 1))
_EIGHT = _FOUR + _DIAGONAL

Pixel = Tuple[int, int]


@dataclass(frozen=True)
class Contour:
    """Connected piece of the boundary between two base regions."""

    id: int
    pixel_chain: np.ndarray  # (N, 2) int, (x, y), ordered along the piece
    strength: float
    regions: Tuple[int, int]


@dataclass(frozen=True)
class ContourHierarchy:
    """Contours with quantized levels plus the merge history that nests them."""

    contours: Tuple[Contour, ...]
    base_labels: np.ndarray  # 0 on watershed lines and inside the target region
    merges: Tuple[Tuple[float, int, int], ...]  # (level, kept, absorbed), non-decreasing
    levels: int

    def level_values(self) -> List[float]:
        """Distinct contour levels, strongest first."""
        return sorted({c.strength for c in self.contours}, reverse=True)

    def regions_at(self, t: float) -> np.ndarray:
        """Partition of the known region keeping every contour with level > t."""
        return self.roots_at(t)[self.base_labels]

    def roots_at(self, t: float) -> np.ndarray:
        """Super-region label of every base region at threshold t (index 0 stays 0)."""
        count = int(self.base_labels.max()) + 1
        parent = np.arange(count)

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for level, kept, absorbed in self.merges:
            if level > t:
                break
            parent[find(absorbed)] = find(kept)
        roots = np.array([find(i) for i in range(count)])
        roots[0] = 0
        return roots

    def region_count(self, t: float) -> int:
        partition = self.regions_at(t)
        return int(np.unique(partition[partition > 0]).size)


def contours_at_threshold(hierarchy: ContourHierarchy, t: float) -> List[Contour]:
    """Contours whose level exceeds t, in id order."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    return [c for c in hierarchy.contours if c.strength > t]


def quantize_level(level: float, levels: int) -> float:
    steps = min(levels, max(1, int(round(level * levels))))
    return steps / levels


def _neighbors(pixel: Pixel, members: set, offsets: Sequence[Pixel] = _EIGHT) -> Iterable[Pixel]:
    x, y = pixel
    for dx, dy in offsets:
        candidate = (x + dx, y + dy)
        if candidate in members:
            yield candidate


def _bfs_far(start: Pixel, members: set):
    parents = {start: None}
    queue = deque([start])
    last = start
    while queue:
        last = queue.popleft()
        for nxt in _neighbors(last, members):
            if nxt not in parents:
                parents[nxt] = last
                queue.append(nxt)
    return last, parents


def order_chain(pixels: Iterable[Pixel]) -> List[Pixel]:
    """Order an 8-connected pixel set along its longest path (or around its loop)."""
    members = set(pixels)
    if len(members) <= 2:
        return sorted(members, key=lambda p: (p[1], p[0]))
    start = min(members, key=lambda p: (p[1], p[0]))
    degrees = {p: sum(1 for _ in _neighbors(p, members)) for p in members}

    if min(degrees.values()) >= 2:
        # Closed loop: walk it, preferring 4-neighbours.
        chain = [start]
        seen = {start}
        current = start
        while True:
            step = next((n for n in _neighbors(current, members, _FOUR) if n not in seen), None)
            if step is None:
                step = next((n for n in _neighbors(current, members, _DIAGONAL) if n not in seen), None)
            if step is None:
                return chain
            chain.append(step)
            seen.add(step)
            current = step

    first, _ = _bfs_far(start, members)
    last, parents = _bfs_far(first, members)
    chain = []
    node = last
    while node is not None:
        chain.append(node)
        node = parents[node]
    chain.reverse()
    return chain


def _split_components(pixels: np.ndarray) -> List[List[Pixel]]:
    """8-connected pieces of a pixel set, in raster order of their first pixel."""
    xs, ys = pixels[:, 0], pixels[:, 1]
    x0, y0 = int(xs.min()), int(ys.min())
    box = np.zeros((int(ys.max()) - y0 + 1, int(xs.max()) - x0 + 1), dtype=bool)
    box[ys - y0, xs - x0] = True
    pieces, count = ndimage.label(box, structure=np.ones((3, 3), dtype=bool))
    result = []
    for index in range(1, count + 1):
        rows, cols = np.nonzero(pieces == index)
        result.append(list(zip((cols + x0).tolist(), (rows + y0).tolist())))
    return result


def _arc_pixels(labels: np.ndarray, known: np.ndarray) -> Dict[Tuple[int, int], np.ndarray]:
    """Watershed-line pixels grouped by the lowest and highest region label around them."""
    footprint = np.ones((3, 3), dtype=bool)
    lifted = np.where(labels > 0, labels, labels.max() + 1)
    low = ndimage.minimum_filter(lifted, footprint=footprint, mode="nearest")
    high = ndimage.maximum_filter(labels, footprint=footprint, mode="constant", cval=0)
    line = (labels == 0) & known & (low < high)
    ys, xs = np.nonzero(line)
    keys = np.stack([low[ys, xs], high[ys, xs]], axis=1)
    arcs: Dict[Tuple[int, int], np.ndarray] = {}
    if keys.size == 0:
        return arcs
    pairs, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for index, (a, b) in enumerate(pairs):
        chosen = inverse == index
        arcs[(int(a), int(b))] = np.stack([xs[chosen], ys[chosen]], axis=1)
    return arcs


def _combine_boundaries(rag: graph.RAG, src: int, dst: int, n: int) -> Dict[str, float]:
    """Length-weighted mean strength of the boundaries src-n and dst-n."""
    default = {"weight": 0.0, "count": 0}
    first = rag[src].get(n, default)
    second = rag[dst].get(n, default)
    count = first["count"] + second["count"]
    weight = (first["count"] * first["weight"] + second["count"] * second["weight"]) / count
    return {"weight": weight, "count": count}


def _merge_regions(
    labels: np.ndarray, known: np.ndarray, strength: np.ndarray, levels: int
) -> List[Tuple[float, int, int]]:
    """Greedy weakest-boundary merging of the base regions; returns (level, kept, absorbed)."""
    # Watershed lines are handed to the nearest region; boundary pixels on
    # both sides then carry the ridge value through the max filter.
    regions = segmentation.expand_labels(labels, distance=2)
    regions[~known] = 0
    ridge = ndimage.maximum_filter(strength, size=3, mode="nearest")
    rag = graph.rag_boundary(regions, ridge, connectivity=2)
    if rag.has_node(0):
        rag.remove_node(0)

    merges: List[Tuple[float, int, int]] = []
    running = [0.0]

    def record(g: graph.RAG, src: int, dst: int) -> None:
        running[0] = max(running[0], float(g[src][dst]["weight"]))
        merges.append((quantize_level(running[0], levels), int(dst), int(src)))

    graph.merge_hierarchical(
        regions,
        rag,
        thresh=np.inf,
        rag_copy=False,
        in_place_merge=True,
        merge_func=record,
        weight_func=_combine_boundaries,
    )
    return merges


def _pair_levels(
    merges: Sequence[Tuple[float, int, int]], pairs: Sequence[Tuple[int, int]], count: int
) -> np.ndarray:
    """Level at which each pair of base regions first shares a super-region (nan if never)."""
    parent = list(range(count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    first = np.array([a for a, _ in pairs], dtype=np.intp)
    second = np.array([b for _, b in pairs], dtype=np.intp)
    joined_at = np.full(len(pairs), np.nan)
    index = 0
    while index < len(merges):
        level = merges[index][0]
        while index < len(merges) and merges[index][0] == level:
            _, kept, absorbed = merges[index]
            parent[find(absorbed)] = find(kept)
            index += 1
        roots = np.array([find(i) for i in range(count)])
        fresh = np.isnan(joined_at) & (roots[first] == roots[second])
        joined_at[fresh] = level
    return joined_at


def build_hierarchy(field: EdgeStrengthField, mask: RegionMask, cfg: PipelineConfig) -> ContourHierarchy:
    """Flood the known region from strength minima, then merge regions greedily."""
    if field.shape != mask.shape:
        raise DimensionMismatchError(f"strength field {field.shape} does not match mask {mask.shape}")
    known = mask.known
    if not known.any():
        raise EmptyRegionError("no known region")

    relief = field.strength.copy()
    relief[mask.inside] = 2.0
    seeds = morphology.local_minima(relief, connectivity=1, allow_borders=True) & known
    markers, seed_count = ndimage.label(seeds)
    labels = segmentation.watershed(
        relief, markers=markers, connectivity=1, mask=known, watershed_line=True
    )
    logger.debug("Watershed produced %d base regions", seed_count)

    arcs = _arc_pixels(labels, known)
    merges = _merge_regions(labels, known, field.strength, cfg.levels)
    pairs = sorted(arcs)
    joined_at = _pair_levels(merges, pairs, int(labels.max()) + 1)

    pieces = []
    for pair, level in zip(pairs, joined_at.tolist()):
        pixels = arcs[pair]
        if np.isnan(level):
            # Regions the merge graph never joined keep their own arc strength.
            level = quantize_level(float(field.strength[pixels[:, 1], pixels[:, 0]].mean()), cfg.levels)
        for component in _split_components(pixels):
            chain = order_chain(component)
            pieces.append((level, pair, chain))
    pieces.sort(key=lambda item: (-item[0], item[2][0][1], item[2][0][0], item[1]))

    contours = tuple(
        Contour(id=index, pixel_chain=np.array(chain, dtype=np.intp), strength=level, regions=pair)
        for index, (level, pair, chain) in enumerate(pieces)
    )
    logger.info(
        "Contour hierarchy: %d regions, %d contours, %d distinct levels",
        seed_count, len(contours), len({c.strength for c in contours}),
    )
    return ContourHierarchy(
        contours=contours,
        base_labels=labels.astype(np.intp),
        merges=tuple(merges),
        levels=cfg.levels,
    )
