from app.texture.exemplar import best_exemplar
from app.texture.filler import FillResult, fill_all, fill_step, initial_confidence
from app.texture.priority import FillFront, compute_priorities

__all__ = [
    "FillFront",
    "FillResult",
    "best_exemplar",
    "compute_priorities",
    "fill_all",
    "fill_step",
    "initial_confidence",
]
