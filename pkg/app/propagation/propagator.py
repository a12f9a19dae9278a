"""Structure propagation stage: anchors, candidates, energies, decode, paste"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from app.config import PipelineConfig
from app.imaging.raster import RasterImage, RegionMask
from app.propagation.anchors import AnchorGraph, build_anchor_graph
from app.propagation.blending import blend_patches
from app.propagation.candidates import CandidateSet, collect_candidates
from app.propagation.energy import EnergyTables, build_energy_tables
from app.propagation.message_passing import Assignment, decode_assignments, propagate_messages
from app.structure.curves import StructureCurve

logger = logging.getLogger(__name__)


@dataclass
class PropagationResult:
    image: RasterImage
    mask: RegionMask
    confidence: np.ndarray
    graph: Optional[AnchorGraph] = None
    candidates: Optional[CandidateSet] = None
    tables: Optional[EnergyTables] = None
    assignments: List[Assignment] = field(default_factory=list)
    converged: bool = True


def propagate_structure(
    image: RasterImage,
    mask: RegionMask,
    confidence: np.ndarray,
    curves: Sequence[StructureCurve],
    cfg: PipelineConfig,
    chains: Iterable[np.ndarray] = (),
) -> PropagationResult:
    """Synthesize texture along every curve; a no-op when there are no curves."""
    if not curves:
        logger.info("No structure curves; skipping propagation")
        return PropagationResult(image=image, mask=mask, confidence=confidence)

    graph = build_anchor_graph(curves, cfg.patch_size)
    candidates = collect_candidates(image, mask, cfg, chains)
    if candidates.size == 0:
        logger.warning("No fully-known candidate patch near the target region; skipping propagation")
        return PropagationResult(image=image, mask=mask, confidence=confidence, graph=graph)

    tables = build_energy_tables(graph, candidates, image, mask, cfg)
    state = propagate_messages(graph, tables, cfg.delta_msg, cfg.max_iters, cfg.threads)
    assignments = decode_assignments(graph, tables, state)
    filled_image, filled_mask, seeded = blend_patches(
        image, mask, confidence, tables.centers, assignments, candidates, cfg.structure_confidence
    )
    return PropagationResult(
        image=filled_image,
        mask=filled_mask,
        confidence=seeded,
        graph=graph,
        candidates=candidates,
        tables=tables,
        assignments=assignments,
        converged=state.converged,
    )
