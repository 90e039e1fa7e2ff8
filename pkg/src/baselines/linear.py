"""Sorted array node whose pairs always start at slot 0.

Inserts and deletes shift every greater pair by one slot, persisting
each dirty line once, then commit through the count word.

Classes:
    LinearNode

Functions:
    linear_search(node: LinearNode, k: Key) -> SearchResult
    linear_insert(arena: PmArena, node: LinearNode, k: Key, v: Value) -> int
    linear_delete(arena: PmArena, node: LinearNode, k: Key) -> int
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from src.circ._consts import NULL, PAIR_SIZE
from src.circ.errors import ContractError, DuplicateKeyError, KeyNotFoundError, NodeFullError
from src.circ.node import KvPair, SearchResult

from ._node import BaselineNode

if TYPE_CHECKING:
    from src.hinting import Key, Offset, Value
    from src.pmem import PmArena


class LinearNode(BaselineNode):
    """Leaf of capacity pairs kept sorted in slots 0..count-1."""

    def __init__(self, arena: PmArena, offset: Offset, capacity: int) -> None:
        super().__init__(arena, offset, capacity * PAIR_SIZE)
        self.capacity = capacity

    @classmethod
    def create(cls, arena: PmArena, capacity: int) -> LinearNode:
        header, _ = cls._allocate(arena, capacity * PAIR_SIZE)
        return cls(arena, header.offset, capacity)

    @property
    def is_full(self) -> bool:
        return self.count >= self.capacity

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.count
        words = self.arena.read_words(self.array, 0, 2 * n)
        return words[0::2], words[1::2]

    def items(self) -> list[KvPair]:
        keys, vals = self.pairs()
        return [KvPair(int(k), int(v)) for k, v in zip(keys, vals, strict=True)]

    def starts_line(self, slot: int) -> bool:
        return self.arena.is_line_start(self.array, slot * PAIR_SIZE)

    def persist_slot(self, slot: int) -> None:
        self.arena.flush_line(self.array, slot * PAIR_SIZE, tag="data")

    def fill(self, pairs: list[KvPair]) -> None:
        """Writes pairs from slot 0 into a fresh node and commits them."""
        pending: list[tuple[int, int]] = []
        for slot, (k, v) in enumerate(pairs):
            pending.extend(((slot * PAIR_SIZE, k), (slot * PAIR_SIZE + 8, v)))
            if slot == len(pairs) - 1 or self.starts_line(slot + 1):
                self.arena.store_sequence(self.array, pending)
                pending = []
                self.persist_slot(slot)
        self.arena.fence()
        self.set_count(len(pairs))


def linear_search(node: LinearNode, k: Key) -> SearchResult:
    keys, vals = node.pairs()
    i = int(np.searchsorted(keys, np.uint64(k)))
    if i < len(keys) and int(keys[i]) == k:
        return SearchResult(True, i, int(vals[i]), (0, len(keys)))
    return SearchResult(False, i, None, (0, len(keys)))

def _shift(node: LinearNode, moves: list[tuple[int, int]], keys: np.ndarray, vals: np.ndarray, *, rightward: bool) -> None:
    pending: list[tuple[int, int]] = []
    for src, dst in moves:
        pending.extend((
            (dst * PAIR_SIZE, int(keys[src])),
            (dst * PAIR_SIZE + 8, int(vals[src])),
        ))
        done = node.starts_line(dst) if rightward else node.starts_line(src)
        if done:
            node.arena.store_sequence(node.array, pending)
            pending = []
            node.persist_slot(dst)
    if pending:
        node.arena.store_sequence(node.array, pending)

def linear_insert(arena: PmArena, node: LinearNode, k: Key, v: Value) -> int:
    """Inserts a pair at its sorted position.

    Greater pairs move one slot right, the last one first.

    Raises:
        ContractError: v is NULL.
        NodeFullError: No free slot.
        DuplicateKeyError: k is already present.

    Returns:
        int: Number of pairs shifted.
    """
    if v == NULL:
        logging.error("Cannot insert a NULL value !")
        raise ContractError
    if node.is_full:
        logging.error("Node %d is full !", node.offset)
        raise NodeFullError

    found = linear_search(node, k)
    if found.found:
        logging.error("Key %d already present !", k)
        raise DuplicateKeyError

    keys, vals = node.pairs()
    n, pos = len(keys), found.pos
    moves = [(i, i + 1) for i in range(n - 1, pos - 1, -1)]
    _shift(node, moves, keys, vals, rightward=True)

    arena.store_sequence(node.array, ((pos * PAIR_SIZE, k), (pos * PAIR_SIZE + 8, v)))
    node.persist_slot(pos)
    arena.fence()
    node.set_count(n + 1)

    arena.count_shifts(len(moves))
    return len(moves)

def linear_delete(arena: PmArena, node: LinearNode, k: Key) -> int:
    """Removes a key, pulling every greater pair one slot left.

    Raises:
        KeyNotFoundError: k is absent.

    Returns:
        int: Number of pairs shifted.
    """
    found = linear_search(node, k)
    if not found.found:
        logging.error("Key %d not found !", k)
        raise KeyNotFoundError

    keys, vals = node.pairs()
    n, pos = len(keys), found.pos
    moves = [(i, i - 1) for i in range(pos + 1, n)]
    _shift(node, moves, keys, vals, rightward=False)

    tail = n - 1
    arena.store_sequence(node.array, ((tail * PAIR_SIZE + 8, NULL), (tail * PAIR_SIZE, NULL)))
    node.persist_slot(tail)
    arena.fence()
    node.set_count(n - 1)

    arena.count_shifts(len(moves))
    return len(moves)
