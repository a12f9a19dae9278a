from app.structure.boundary_edges import BoundaryEdge, collect_boundary_edges
from app.structure.curves import StructureCurve, fit_curve, menger_curvature
from app.structure.divergence import js_divergence, pair_cost
from app.structure.matching import EdgePairing, match_edges

__all__ = [
    "BoundaryEdge",
    "EdgePairing",
    "StructureCurve",
    "collect_boundary_edges",
    "fit_curve",
    "js_divergence",
    "match_edges",
    "menger_curvature",
    "pair_cost",
]
