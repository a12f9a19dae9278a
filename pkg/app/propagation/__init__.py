from app.propagation.anchors import Anchor, AnchorGraph, build_anchor_graph
from app.propagation.blending import blend_patches
from app.propagation.candidates import CandidateSet, collect_candidates
from app.propagation.energy import EnergyTables, build_energy_tables, edge_energy, node_energy
from app.propagation.message_passing import (
    Assignment,
    MessageState,
    decode_assignments,
    propagate_messages,
)
from app.propagation.propagator import PropagationResult, propagate_structure

__all__ = [
    "Anchor",
    "AnchorGraph",
    "Assignment",
    "CandidateSet",
    "EnergyTables",
    "MessageState",
    "PropagationResult",
    "blend_patches",
    "build_anchor_graph",
    "build_energy_tables",
    "collect_candidates",
    "decode_assignments",
    "edge_energy",
    "node_energy",
    "propagate_messages",
    "propagate_structure",
]
