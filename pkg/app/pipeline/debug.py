"""Inspectable intermediates: PNG snapshots and one-JSON-record-per-line text files"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
from PIL import Image

from app.contour.edges import EdgeStrengthField
from app.contour.hierarchy import ContourHierarchy
from app.errors import ImageIOError
from app.imaging.raster import RasterImage, RegionMask
from app.propagation.propagator import PropagationResult
from app.structure.boundary_edges import BoundaryEdge
from app.structure.curves import StructureCurve
from app.structure.matching import EdgePairing

logger = logging.getLogger(__name__)


def _round(values, digits: int = 4) -> List:
    return np.round(np.asarray(values, dtype=np.float64), digits).tolist()


class DebugRecorder:
    """Writes stage artifacts into one directory; every method is a no-op when disabled."""

    def __init__(self, directory: Optional[Path]):
        self.directory = Path(directory) if directory else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def _write_records(self, name: str, records: Iterable[dict]) -> None:
        path = self.directory / name
        try:
            with open(path, "w", encoding="utf-8") as handle:
                for record in records:
                    handle.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise ImageIOError(f"cannot write debug file {path}: {exc}") from exc
        logger.debug("Wrote %s", path)

    def strength(self, field: EdgeStrengthField) -> None:
        if not self.enabled:
            return
        path = self.directory / "strength.png"
        data = np.clip(np.rint(field.strength * 255.0), 0, 255).astype(np.uint8)
        try:
            Image.fromarray(data, mode="L").save(path, format="PNG")
        except OSError as exc:
            raise ImageIOError(f"cannot write debug file {path}: {exc}") from exc

    def contours(self, hierarchy: ContourHierarchy) -> None:
        if not self.enabled:
            return
        self._write_records("contours.txt", (
            {"id": c.id, "level": c.strength, "regions": list(c.regions), "pixelChain": c.pixel_chain.tolist()}
            for c in hierarchy.contours
        ))

    def edges(self, edges: Sequence[BoundaryEdge], pairing: EdgePairing) -> None:
        if not self.enabled:
            return
        costs = {}
        for source, target, cost in pairing.pairs:
            costs[source] = costs[target] = cost
        self._write_records("edges.txt", (
            {
                "id": e.id,
                "contour": e.contour_id,
                "boundaryPosition": round(e.boundary_position, 4),
                "L": e.strength,
                "hit": list(e.hit),
                "pairedWith": pairing.partner_of(e.id),
                "M": costs.get(e.id),
            }
            for e in edges
        ))

    def pairs(self, pairing: EdgePairing) -> None:
        if not self.enabled:
            return
        records: List[dict] = [
            {"source": s, "target": t, "M": cost} for s, t, cost in pairing.pairs
        ]
        records.extend({"single": edge_id} for edge_id in pairing.unmatched)
        self._write_records("pairs.txt", records)

    def curves(self, curves: Sequence[StructureCurve]) -> None:
        if not self.enabled:
            return
        self._write_records("curves.txt", (
            {
                "source": c.source_edge_id,
                "target": c.target_edge_id,
                "fallback": c.fallback,
                "length": round(c.length, 4),
                "curvature": _round(c.curvature_profile, 6),
                "samples": _round(c.samples, 3),
            }
            for c in curves
        ))

    def assignments(self, result: PropagationResult) -> None:
        if not self.enabled or result.graph is None or result.candidates is None:
            return
        candidates = result.candidates
        records = []
        for assignment in result.assignments:
            anchor = result.graph.anchors[assignment.anchor]
            t, r = candidates.split(assignment.global_label)
            records.append({
                "anchor": assignment.anchor,
                "curveId": list(anchor.curve_ids),
                "t": t,
                "source": candidates.centers[t].tolist(),
                "theta": round(float(candidates.rotations[r]), 6),
                "E": assignment.energy,
            })
        self._write_records("assignments.txt", records)

    def snapshot(self, name: str, image: RasterImage, mask: Optional[RegionMask] = None) -> None:
        if not self.enabled:
            return
        image.save(self.directory / f"{name}.png")
        if mask is not None:
            mask.save(self.directory / f"{name}_mask.png")

    def fill_snapshot(self, iteration: int, image: RasterImage, mask: RegionMask) -> None:
        self.snapshot(f"fill_{iteration:05d}", image, mask)
