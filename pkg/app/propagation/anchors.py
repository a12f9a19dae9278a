"""Anchor points along structure curves and the graph linking them"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from app.structure.curves import StructureCurve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Anchor:
    index: int
    x: float
    y: float
    curve_ids: Tuple[int, ...]

    @property
    def pixel(self) -> Tuple[int, int]:
        return int(round(self.x)), int(round(self.y))


@dataclass(frozen=True)
class AnchorGraph:
    anchors: Tuple[Anchor, ...]
    edges: Tuple[Tuple[int, int], ...]  # (i, j) with i < j
    spacing: int

    def __len__(self) -> int:
        return len(self.anchors)

    def neighbors(self) -> Dict[int, List[int]]:
        adjacency: Dict[int, List[int]] = {anchor.index: [] for anchor in self.anchors}
        for i, j in self.edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        return {key: sorted(value) for key, value in adjacency.items()}

    def degree(self, index: int) -> int:
        return sum(1 for edge in self.edges if index in edge)

    def components(self) -> List[List[int]]:
        """Connected vertex sets, each sorted, ordered by their smallest vertex."""
        adjacency = self.neighbors()
        seen = set()
        groups = []
        for start in sorted(adjacency):
            if start in seen:
                continue
            group = []
            queue = deque([start])
            seen.add(start)
            while queue:
                node = queue.popleft()
                group.append(node)
                for nxt in adjacency[node]:
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
            groups.append(sorted(group))
        return groups

    def path_order(self, component: Sequence[int]):
        """Vertices of a simple-path component from end to end, or None."""
        adjacency = self.neighbors()
        degrees = {node: len(adjacency[node]) for node in component}
        edge_count = sum(degrees.values()) // 2
        if max(degrees.values()) > 2 or edge_count != len(component) - 1:
            return None
        start = min(node for node in component if degrees[node] <= 1)
        order = [start]
        previous = None
        while True:
            step = [n for n in adjacency[order[-1]] if n != previous]
            if not step:
                return order
            previous = order[-1]
            order.append(step[0])


def anchor_positions(curve: StructureCurve, spacing: int) -> List[Tuple[float, float]]:
    """Evenly spaced points from end to end, about `spacing` px of arc apart."""
    length = curve.length
    intervals = max(1, int(round(length / spacing)))
    return [curve.point_at(length * k / intervals) for k in range(intervals + 1)]


def build_anchor_graph(curves: Sequence[StructureCurve], patch_size: int) -> AnchorGraph:
    """Anchors along every curve; anchors of different curves closer than the spacing merge."""
    spacing = max(1, round(patch_size / 4))
    positions: List[Tuple[float, float]] = []
    members: List[List[int]] = []
    edges = set()
    for curve_id, curve in enumerate(curves):
        previous = None
        for x, y in anchor_positions(curve, spacing):
            target = None
            best = math.inf
            for vertex, (vx, vy) in enumerate(positions):
                if curve_id in members[vertex]:
                    continue
                distance = math.hypot(vx - x, vy - y)
                if distance < spacing and distance < best:
                    target, best = vertex, distance
            if target is None:
                target = len(positions)
                positions.append((x, y))
                members.append([curve_id])
            else:
                members[target].append(curve_id)
            if previous is not None and previous != target:
                edges.add((min(previous, target), max(previous, target)))
            previous = target

    anchors = tuple(
        Anchor(index=i, x=x, y=y, curve_ids=tuple(members[i])) for i, (x, y) in enumerate(positions)
    )
    graph = AnchorGraph(anchors=anchors, edges=tuple(sorted(edges)), spacing=spacing)
    merged = sum(1 for anchor in anchors if len(anchor.curve_ids) > 1)
    logger.info(
        "Anchor graph: %d anchors, %d edges, %d merged at intersections",
        len(anchors), len(graph.edges), merged,
    )
    return graph
