"""B+-tree of circular nodes on simulated persistent memory."""

from .node import (
    CircNode,
    KvPair,
    SearchResult,
    circ_index,
    node_delete,
    node_insert,
    node_logical_view,
    node_search,
    node_search_linear,
    node_update,
)
from .recovery import Fix, RecoveryReport, recover
from .tree import CircTree, OpOutcome, OutcomeKind

__all__ = [
    "CircNode",
    "CircTree",
    "Fix",
    "KvPair",
    "OpOutcome",
    "OutcomeKind",
    "RecoveryReport",
    "SearchResult",
    "circ_index",
    "node_delete",
    "node_insert",
    "node_logical_view",
    "node_search",
    "node_search_linear",
    "node_update",
    "recover",
]
