"""Min-sum message passing and label decoding on the anchor graph"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.propagation.anchors import AnchorGraph
from app.propagation.energy import EnergyTables

logger = logging.getLogger(__name__)

Directed = Tuple[int, int]


@dataclass
class MessageState:
    messages: Dict[Directed, np.ndarray]  # (i, j) -> message from i to j over j's labels
    iterations: int
    converged: bool


@dataclass(frozen=True)
class Assignment:
    anchor: int
    label: int  # index into the anchor's shortlist
    global_label: int
    energy: float


def propagate_messages(
    graph: AnchorGraph,
    tables: EnergyTables,
    delta: float,
    max_iters: int,
    threads: int = 1,
) -> MessageState:
    """Synchronous min-sum updates, each message shifted to a zero minimum."""
    adjacency = graph.neighbors()
    directed: List[Directed] = []
    for i, j in graph.edges:
        directed.extend([(i, j), (j, i)])
    messages = {(i, j): np.zeros(tables.node[j].shape[0]) for i, j in directed}
    if not directed:
        return MessageState(messages=messages, iterations=0, converged=True)

    def update(edge: Directed) -> np.ndarray:
        i, j = edge
        gathered = tables.node[i].copy()
        for k in adjacency[i]:
            if k != j:
                gathered += messages[(k, i)]
        candidate = (gathered[:, None] + tables.pair(i, j)).min(axis=0)
        return candidate - candidate.min()

    converged = False
    iterations = 0
    with ThreadPoolExecutor(max_workers=threads) as executor:
        while iterations < max_iters:
            fresh = list(executor.map(update, directed))
            iterations += 1
            change = max(float(np.abs(new - messages[edge]).max()) for edge, new in zip(directed, fresh))
            messages = dict(zip(directed, fresh))
            if change < delta:
                converged = True
                break
    if not converged:
        logger.warning("Message passing stopped after %d rounds without converging", iterations)
    else:
        logger.debug("Message passing converged after %d rounds", iterations)
    return MessageState(messages=messages, iterations=iterations, converged=converged)


def beliefs(graph: AnchorGraph, tables: EnergyTables, state: MessageState) -> List[np.ndarray]:
    adjacency = graph.neighbors()
    out = []
    for node in range(len(graph)):
        total = tables.node[node].copy()
        for k in adjacency[node]:
            total += state.messages[(k, node)]
        out.append(total)
    return out


def belief_labels(graph: AnchorGraph, tables: EnergyTables, state: MessageState) -> List[int]:
    """Per-anchor argmin of node energy plus incoming messages (lowest label on ties)."""
    return [int(np.argmin(b)) for b in beliefs(graph, tables, state)]


def path_labels(tables: EnergyTables, order: Sequence[int]) -> List[int]:
    """Exact minimum-energy labels along a path by forward DP and backtracking."""
    cost = tables.node[order[0]].copy()
    pointers = []
    for previous, node in zip(order, order[1:]):
        stage = cost[:, None] + tables.pair(previous, node)
        best = np.argmin(stage, axis=0)
        pointers.append(best)
        cost = tables.node[node] + stage[best, np.arange(stage.shape[1])]
    labels = [int(np.argmin(cost))]
    for best in reversed(pointers):
        labels.append(int(best[labels[-1]]))
    labels.reverse()
    return labels


def labeling_energy(graph: AnchorGraph, tables: EnergyTables, labels: Sequence[int]) -> float:
    total = sum(float(tables.node[i][labels[i]]) for i in range(len(graph)))
    for i, j in graph.edges:
        total += float(tables.edge[(i, j)][labels[i], labels[j]])
    return total


def decode_assignments(graph: AnchorGraph, tables: EnergyTables, state: MessageState) -> List[Assignment]:
    """Exact DP on path components; belief argmin everywhere else."""
    labels = [0] * len(graph)
    fallback = belief_labels(graph, tables, state)
    for component in graph.components():
        order = graph.path_order(component)
        if order is None:
            for node in component:
                labels[node] = fallback[node]
            continue
        for node, label in zip(order, path_labels(tables, order)):
            labels[node] = label
    return [
        Assignment(
            anchor=node,
            label=labels[node],
            global_label=int(tables.shortlists[node][labels[node]]),
            energy=float(tables.node[node][labels[node]]),
        )
        for node in range(len(graph))
    ]
