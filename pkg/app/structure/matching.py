"""Non-crossing edge pairing by interval dynamic programming"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.config import PipelineConfig
from app.structure.boundary_edges import BoundaryEdge
from app.structure.divergence import PairCost, pair_cost

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgePairing:
    pairs: List[Tuple[int, int, float]] = field(default_factory=list)  # (source id, target id, M)
    unmatched: List[int] = field(default_factory=list)
    total_cost: float = 0.0

    def partner_of(self, edge_id: int) -> Optional[int]:
        for source, target, _ in self.pairs:
            if source == edge_id:
                return target
            if target == edge_id:
                return source
        return None


# (cost, pair count, pairs); costs within _COST_TOLERANCE count as equal.
_Plan = Tuple[float, int, Tuple[Tuple[int, int], ...]]
_EMPTY: _Plan = (0.0, 0, ())
_COST_TOLERANCE = 1e-12


def _join(*plans: _Plan) -> _Plan:
    cost = 0.0
    count = 0
    pairs: Tuple[Tuple[int, int], ...] = ()
    for plan in plans:
        cost += plan[0]
        count += plan[1]
        pairs += plan[2]
    return cost, count, tuple(sorted(pairs))


def _better(option: _Plan, plan: _Plan) -> bool:
    if abs(option[0] - plan[0]) > _COST_TOLERANCE:
        return option[0] < plan[0]
    return option[1:] < plan[1:]


def match_from_costs(
    costs: np.ndarray,
    admissible: np.ndarray,
    mu_single: float,
) -> Tuple[float, List[Tuple[int, int]]]:
    """Minimum-cost non-crossing partial matching of k items in boundary order.

    Unmatched items cost mu_single each. Ties go to fewer pairs, then the
    lexicographically smallest pair list.
    """
    k = costs.shape[0]
    if k == 0:
        return 0.0, []

    # best[i][j] covers items i..j inclusive; empty intervals cost nothing.
    best: List[List[_Plan]] = [[_EMPTY] * (k + 1) for _ in range(k + 1)]

    def span(i: int, j: int) -> _Plan:
        return best[i][j] if i <= j else _EMPTY

    for length in range(1, k + 1):
        for i in range(0, k - length + 1):
            j = i + length - 1
            single: _Plan = (mu_single, 0, ())
            plan = _join(single, span(i + 1, j))
            for m in range(i + 1, j + 1):
                if not admissible[i, m]:
                    continue
                paired: _Plan = (float(costs[i, m]), 1, ((i, m),))
                option = _join(paired, span(i + 1, m - 1), span(m + 1, j))
                if _better(option, plan):
                    plan = option
            best[i][j] = plan
    final = best[0][k - 1]
    return final[0], list(final[2])


def cost_matrix(edges: Sequence[BoundaryEdge], cfg: PipelineConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Pair metric and admissibility for every edge pair."""
    k = len(edges)
    costs = np.zeros((k, k))
    admissible = np.zeros((k, k), dtype=bool)
    if k == 0:
        return costs, admissible
    l_max = max(edge.strength for edge in edges)
    index_pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]

    def evaluate(pair: Tuple[int, int]) -> PairCost:
        i, j = pair
        return pair_cost(edges[i], edges[j], l_max, cfg.delta_h, cfg.pair_metric)

    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        results = list(executor.map(evaluate, index_pairs))
    for (i, j), result in zip(index_pairs, results):
        costs[i, j] = costs[j, i] = result.cost
        admissible[i, j] = admissible[j, i] = result.admissible
    return costs, admissible


def match_edges(edges: Sequence[BoundaryEdge], cfg: PipelineConfig) -> EdgePairing:
    """Pair boundary edges (sorted by boundary position) without crossing chords."""
    if not edges:
        return EdgePairing()
    positions = [edge.boundary_position for edge in edges]
    if positions != sorted(positions):
        raise ValueError("edges must be sorted by boundary position")

    costs, admissible = cost_matrix(edges, cfg)
    total, pairs = match_from_costs(costs, admissible, cfg.mu_single)
    matched = {index for pair in pairs for index in pair}
    pairing = EdgePairing(
        pairs=[(edges[i].id, edges[j].id, float(costs[i, j])) for i, j in pairs],
        unmatched=[edge.id for index, edge in enumerate(edges) if index not in matched],
        total_cost=total,
    )
    logger.info(
        "Matched %d edge pairs, %d edges left single (total cost %.4f)",
        len(pairing.pairs), len(pairing.unmatched), total,
    )
    return pairing
