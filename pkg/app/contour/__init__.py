from app.contour.edges import EdgeStrengthField, edge_strength
from app.contour.hierarchy import (
    Contour,
    ContourHierarchy,
    build_hierarchy,
    contours_at_threshold,
)

__all__ = [
    "Contour",
    "ContourHierarchy",
    "EdgeStrengthField",
    "build_hierarchy",
    "contours_at_threshold",
    "edge_strength",
]
