"""Node and edge energies over shortlisted (candidate, rotation) labels"""
from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.config import PipelineConfig
from app.imaging.raster import Patch, PatchSamples, RasterImage, RegionMask, extract_patch
from app.propagation.anchors import AnchorGraph
from app.propagation.candidates import CandidateSet

logger = logging.getLogger(__name__)


def overlap_energy(ssd, overlap, area: int, cfg: PipelineConfig):
    """Mean squared difference over the overlap, scaled by the overlap share P = overlap / area.

    The "divisor" mode divides by P (sparse overlaps cost more); "literal"
    multiplies by it. An empty overlap costs e_cap. Works elementwise.
    """
    ssd = np.asarray(ssd, dtype=np.float64)
    overlap = np.asarray(overlap, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = ssd / overlap
        share = overlap / area
        energy = mean / share if cfg.energy == "divisor" else mean * share
    return np.where(overlap > 0, energy, cfg.e_cap)


def node_energy(
    anchor: PatchSamples, values: np.ndarray, valid: np.ndarray, cfg: PipelineConfig
) -> float:
    """Energy of placing one rotated candidate (values, valid) at an anchor patch."""
    compared = anchor.usable & valid
    squared = ((anchor.values - values) ** 2).sum(axis=-1)
    ssd = float(squared[compared].sum())
    return float(overlap_energy(ssd, compared.sum(), anchor.side ** 2, cfg))


def _overlap_slices(offset: Tuple[int, int], side: int):
    """Index ranges shared by two patches whose centers differ by offset (dx, dy)."""
    dx, dy = offset
    rows = slice(max(0, dy), min(side, side + dy))
    cols = slice(max(0, dx), min(side, side + dx))
    shifted_rows = slice(rows.start - dy, rows.stop - dy)
    shifted_cols = slice(cols.start - dx, cols.stop - dx)
    return (rows, cols), (shifted_rows, shifted_cols)


def edge_energy(
    first: Tuple[np.ndarray, np.ndarray, Tuple[int, int]],
    second: Tuple[np.ndarray, np.ndarray, Tuple[int, int]],
    cfg: PipelineConfig,
) -> float:
    """Energy between two placed patches, each given as (values, valid, center)."""
    table = edge_table(
        first[0][None], first[1][None], first[2], second[0][None], second[1][None], second[2], cfg
    )
    return float(table[0, 0])


def edge_table(
    values_i: np.ndarray,
    valid_i: np.ndarray,
    center_i: Tuple[int, int],
    values_j: np.ndarray,
    valid_j: np.ndarray,
    center_j: Tuple[int, int],
    cfg: PipelineConfig,
) -> np.ndarray:
    """Energies for every label pair; inputs stack K patches along axis 0."""
    side = values_i.shape[1]
    offset = (center_j[0] - center_i[0], center_j[1] - center_i[1])
    (rows, cols), (rows_j, cols_j) = _overlap_slices(offset, side)
    k_i, k_j = values_i.shape[0], values_j.shape[0]
    if rows.start >= rows.stop or cols.start >= cols.stop:
        return np.full((k_i, k_j), cfg.e_cap)
    a = values_i[:, rows, cols].reshape(k_i, -1, 3)
    b = values_j[:, rows_j, cols_j].reshape(k_j, -1, 3)
    va = valid_i[:, rows, cols].reshape(k_i, -1)
    vb = valid_j[:, rows_j, cols_j].reshape(k_j, -1)
    compared = va[:, None, :] & vb[None, :, :]
    squared = ((a[:, None, :, :] - b[None, :, :, :]) ** 2).sum(axis=-1)
    ssd = np.where(compared, squared, 0.0).sum(axis=-1)
    return overlap_energy(ssd, compared.sum(axis=-1), side * side, cfg)


@dataclass
class EnergyTables:
    """Per-anchor shortlists of global labels with their node and edge energies."""

    shortlists: List[np.ndarray]  # global label indices, ascending
    node: List[np.ndarray]  # (K_i,)
    edge: Dict[Tuple[int, int], np.ndarray]  # (i, j), i < j -> (K_i, K_j)
    centers: List[Tuple[int, int]]

    def pair(self, i: int, j: int) -> np.ndarray:
        """Edge table oriented as (labels of i, labels of j)."""
        if i < j:
            return self.edge[(i, j)]
        return self.edge[(j, i)].T


def anchor_patch(anchor_xy: Tuple[int, int], image: RasterImage, mask: RegionMask, half: int) -> PatchSamples:
    patch = Patch(anchor_xy, half).clamped(image.width, image.height)
    return extract_patch(image, mask, patch)


def _shortlist(energies: np.ndarray, size: int) -> np.ndarray:
    order = np.argsort(energies, kind="stable")[:size]
    return np.sort(order)


def _inherit_shortlists(graph: AnchorGraph, seeded: Dict[int, np.ndarray], fallback: np.ndarray) -> List[np.ndarray]:
    """Anchors with no usable overlap borrow the shortlist of the nearest seeded anchor."""
    adjacency = graph.neighbors()
    owner: Dict[int, int] = {}
    queue = deque()
    for index in sorted(seeded):
        owner[index] = index
        queue.append(index)
    while queue:
        node = queue.popleft()
        for nxt in adjacency[node]:
            if nxt not in owner:
                owner[nxt] = owner[node]
                queue.append(nxt)
    return [
        seeded[owner[i]] if i in owner else fallback
        for i in range(len(graph))
    ]


def build_energy_tables(
    graph: AnchorGraph,
    candidates: CandidateSet,
    image: RasterImage,
    mask: RegionMask,
    cfg: PipelineConfig,
    shortlist: Optional[int] = None,
) -> EnergyTables:
    """Node energies for all labels, shortlisted, then edge energies between shortlists."""
    half = cfg.half_extent
    side = cfg.patch_size
    size = min(shortlist or cfg.candidate_shortlist, candidates.label_count)
    rotations = len(candidates.rotations)
    values = candidates.values.transpose(1, 0, 2, 3, 4).reshape(-1, side, side, 3)
    valid = candidates.valid.transpose(1, 0, 2, 3).reshape(-1, side, side)

    def anchor_row(index: int):
        anchor = graph.anchors[index]
        samples = anchor_patch(anchor.pixel, image, mask, half)
        compared = samples.usable[None] & valid
        squared = ((samples.values[None] - values) ** 2).sum(axis=-1)
        ssd = np.where(compared, squared, 0.0).sum(axis=(1, 2))
        overlap = compared.sum(axis=(1, 2))
        center = Patch(anchor.pixel, half).clamped(image.width, image.height).center
        return overlap_energy(ssd, overlap, side * side, cfg), bool(overlap.any()), center

    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        rows = list(executor.map(anchor_row, range(len(graph))))

    seeded = {i: _shortlist(energies, size) for i, (energies, has_overlap, _) in enumerate(rows) if has_overlap}
    shortlists = _inherit_shortlists(graph, seeded, np.arange(size))
    node = [rows[i][0][shortlists[i]] for i in range(len(graph))]
    centers = [rows[i][2] for i in range(len(graph))]

    def edge_row(edge: Tuple[int, int]) -> np.ndarray:
        i, j = edge
        return edge_table(
            values[shortlists[i]], valid[shortlists[i]], centers[i],
            values[shortlists[j]], valid[shortlists[j]], centers[j],
            cfg,
        )

    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        tables = list(executor.map(edge_row, graph.edges))
    logger.info(
        "Energy tables: %d anchors x %d labels (of %d, %d rotations), %d edges",
        len(graph), size, candidates.label_count, rotations, len(graph.edges),
    )
    return EnergyTables(
        shortlists=shortlists,
        node=node,
        edge=dict(zip(graph.edges, tables)),
        centers=centers,
    )
