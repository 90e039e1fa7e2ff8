"""Baseline leaves for comparison: sorted linear arrays and append-only logs."""

from .append import AppendNode, append_delete, append_insert, append_search
from .linear import LinearNode, linear_delete, linear_insert, linear_search
from .tree import BaselineKind, BaselineTree

__all__ = [
    "AppendNode",
    "BaselineKind",
    "BaselineTree",
    "LinearNode",
    "append_delete",
    "append_insert",
    "append_search",
    "linear_delete",
    "linear_insert",
    "linear_search",
]
