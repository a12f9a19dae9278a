"""Histogram divergence and the edge-pair metric"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import xlogy

from app.errors import HistogramMismatchError
from app.imaging.histogram import ColorHistogram

MAX_DIVERGENCE = 2.0 * np.log(2.0)


def js_divergence(first: ColorHistogram, second: ColorHistogram) -> float:
    """Sum of both Kullback-Leibler terms against the midpoint, natural log.

    Zero-mass bins contribute nothing; the result lies in [0, 2 ln 2].
    """
    p = np.asarray(first.counts, dtype=np.float64)
    q = np.asarray(second.counts, dtype=np.float64)
    if first.bins_per_channel != second.bins_per_channel or p.shape != q.shape:
        raise HistogramMismatchError(
            f"cannot compare {p.size}-bin and {q.size}-bin histograms"
        )
    total = p + q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_p = np.where(p > 0, 2.0 * p / np.where(total > 0, total, 1.0), 1.0)
        ratio_q = np.where(q > 0, 2.0 * q / np.where(total > 0, total, 1.0), 1.0)
    # Summing the two terms bin by bin keeps the value symmetric to the last bit.
    terms = xlogy(p, ratio_p) + xlogy(q, ratio_q)
    value = float(np.sum(terms))
    return min(max(value, 0.0), MAX_DIVERGENCE)


@dataclass(frozen=True)
class PairCost:
    """Metric value for one edge pair plus the flank distances it was chosen from."""

    cost: float
    distances: Tuple[float, float]
    admissible: bool


def flank_distances(source, target) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Flank distances under both side correspondences (straight, swapped)."""
    s1, s2 = source.flank_histograms
    t1, t2 = target.flank_histograms
    straight = (js_divergence(s1, t1), js_divergence(s2, t2))
    swapped = (js_divergence(s1, t2), js_divergence(s2, t1))
    return straight, swapped


def pair_cost(source, target, l_max: float, delta_h: float = np.inf, metric: str = "paper") -> PairCost:
    """Strength-difference weighted flank distance of two boundary edges.

    `metric="paper"` multiplies by |L_s - L_t| / L_max; `"regularized"` by
    1 + |L_s - L_t| / L_max so equal strengths do not zero the cost.
    """
    if l_max <= 0:
        raise ValueError(f"L_max must be positive, got {l_max}")
    straight, swapped = flank_distances(source, target)
    # Ties prefer the straight correspondence.
    chosen = swapped if sum(swapped) < sum(straight) else straight
    gap = abs(source.strength - target.strength) / l_max
    multiplier = 1.0 + gap if metric == "regularized" else gap
    admissible = any(d1 < delta_h and d2 < delta_h for d1, d2 in (straight, swapped))
    return PairCost(cost=multiplier * sum(chosen), distances=chosen, admissible=admissible)
