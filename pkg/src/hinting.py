"""Hintings shared by the tree, store and benchmark packages.

TypesAlias:
    Key
    Value
    Offset
    WordIndex
    LineIndex

Protocols:
    Index
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Protocol, TypeAlias

if TYPE_CHECKING:
    from src.pmem.arena import PmArena

Key: TypeAlias = int
Value: TypeAlias = int
Offset: TypeAlias = int
WordIndex: TypeAlias = int
LineIndex: TypeAlias = int


class Index(Protocol):
    """What the store and the benchmark need from any of the trees."""

    arena: PmArena
    splits: int
    merges: int

    def insert(self, key: Key, value: Value) -> object:
        """Insert a new pair."""

    def search(self, key: Key) -> Value | None:
        """Return the value of key or None."""

    def delete(self, key: Key) -> object:
        """Remove key if present."""

    def scan(self, lo: Key, hi: Key) -> list[tuple[Key, Value]]:
        """Return the pairs within [lo, hi] in key order."""
