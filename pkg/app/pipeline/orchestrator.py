"""Runs contour detection, structure estimation, propagation and texture fill in order"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from app.config import PipelineConfig
from app.contour.edges import edge_strength
from app.contour.hierarchy import build_hierarchy
from app.errors import DegenerateGeometryError, EmptyRegionError, classify_exit_code
from app.imaging.raster import RasterImage, RegionMask
from app.pipeline.debug import DebugRecorder
from app.propagation.propagator import PropagationResult, propagate_structure
from app.structure.boundary_edges import BoundaryEdge, collect_boundary_edges
from app.structure.curves import StructureCurve, fit_curve
from app.structure.matching import EdgePairing, match_edges
from app.texture.filler import fill_all, initial_confidence

logger = logging.getLogger(__name__)


@dataclass
class CompletionResult:
    image: RasterImage
    edges: List[BoundaryEdge] = field(default_factory=list)
    pairing: EdgePairing = field(default_factory=EdgePairing)
    curves: List[StructureCurve] = field(default_factory=list)
    propagation: Optional[PropagationResult] = None
    fill_iterations: int = 0


class CompletionPipeline:
    """Removes the masked object from one image"""

    def __init__(self, cfg: PipelineConfig, recorder: Optional[DebugRecorder] = None):
        self.cfg = cfg
        self.recorder = recorder or DebugRecorder(None)

    def run(self, image: RasterImage, mask: RegionMask) -> CompletionResult:
        mask.check_matches(image)
        if mask.is_empty:
            raise EmptyRegionError("mask marks no pixel for removal")
        if mask.is_full:
            raise EmptyRegionError("no known region: mask covers the whole image")

        result = CompletionResult(image=image)
        confidence = initial_confidence(mask)
        if self.cfg.mode == "structure":
            edges, pairing, curves = self.estimate_structure(image, mask)
            result.edges, result.pairing, result.curves = edges, pairing, curves
            chains = [edge.pixel_chain for edge in edges]
            propagation = propagate_structure(image, mask, confidence, curves, self.cfg, chains)
            self.recorder.assignments(propagation)
            self.recorder.snapshot("propagated", propagation.image, propagation.mask)
            result.propagation = propagation
            image, mask, confidence = propagation.image, propagation.mask, propagation.confidence
        else:
            logger.info("Exemplar-only mode: skipping structure stages")

        filled = fill_all(image, mask, confidence, self.cfg, snapshot=self.recorder.fill_snapshot)
        result.image = filled.image
        result.fill_iterations = filled.iterations
        return result

    def estimate_structure(self, image: RasterImage, mask: RegionMask):
        strength = edge_strength(image, mask, self.cfg)
        self.recorder.strength(strength)
        hierarchy = build_hierarchy(strength, mask, self.cfg)
        self.recorder.contours(hierarchy)

        edges = collect_boundary_edges(hierarchy, image, mask, self.cfg)
        pairing = match_edges(edges, self.cfg)
        self.recorder.edges(edges, pairing)
        self.recorder.pairs(pairing)

        by_id = {edge.id: edge for edge in edges}

        def bridge(pair):
            source, target, _ = pair
            try:
                return fit_curve(by_id[source], by_id[target], mask, self.cfg)
            except DegenerateGeometryError as exc:
                logger.warning("Skipping pair %d-%d: %s", source, target, exc)
                return None

        with ThreadPoolExecutor(max_workers=self.cfg.threads) as executor:
            fitted = list(executor.map(bridge, pairing.pairs))
        curves = [curve for curve in fitted if curve is not None]
        fallbacks = sum(1 for curve in curves if curve.fallback)
        logger.info("Fitted %d structure curves (%d fallback bridges)", len(curves), fallbacks)
        self.recorder.curves(curves)
        return edges, pairing, curves


def run_pipeline(
    input_path: Path,
    mask_path: Path,
    output_path: Path,
    cfg: PipelineConfig,
    debug_dir: Optional[Path] = None,
) -> int:
    """Complete one image file; returns the process exit status."""
    started = time.monotonic()
    try:
        image = RasterImage.load(input_path)
        mask = RegionMask.load(mask_path)
        mask.check_matches(image, label=f"mask {mask_path}")
        recorder = DebugRecorder(debug_dir)
        result = CompletionPipeline(cfg, recorder).run(image, mask)
        result.image.save(output_path)
    except Exception as exc:
        code = classify_exit_code(exc)
        if code == 1:
            logger.exception("Completion failed: %s", exc)
        else:
            logger.error("Completion failed (exit %d): %s", code, exc)
        return code
    logger.info(
        "Wrote %s (%d curves, %d fill iterations) in %.1fs",
        output_path, len(result.curves), result.fill_iterations, time.monotonic() - started,
    )
    return 0
