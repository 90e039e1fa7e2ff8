"""Unsorted log node: every insert or delete appends one flagged entry.

An entry is (flag, key, value, padding) and fills a 32-byte aligned
block, so it never straddles a cache line of 32 bytes or more. The
flag word carries the entry kind in its low bits and a seal of key and
value above them. It is stored last, and one flush then one fence make
the entry durable. A flag whose seal does not match its entry reads as
absent, so the log length is the run of sealed entries from slot 0 and
no count word is persisted.

Lookups replay the log, the latest entry of a key wins.

Classes:
    AppendNode

Functions:
    seal(flag: int, k: Key, v: Value) -> int
    append_search(node: AppendNode, k: Key) -> SearchResult
    append_insert(node: AppendNode, k: Key, v: Value) -> None
    append_delete(node: AppendNode, k: Key) -> None
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from src.circ._consts import NULL
from src.circ.errors import ContractError, DuplicateKeyError, KeyNotFoundError, NodeFullError
from src.circ.node import KvPair, SearchResult

from ._consts import ENTRY_SIZE, ENTRY_WORDS, FLAG_BITS, FLAG_DELETE, FLAG_INSERT, SEAL_MASK
from ._node import BaselineNode

if TYPE_CHECKING:
    from src.hinting import Key, Offset, Value
    from src.pmem import PmArena

_MIX_KEY = 0x9E3779B97F4A7C15
_MIX_VALUE = 0xBF58476D1CE4E5B9


def seal(flag: int, k: Key, v: Value) -> int:
    """Flag word of the entry (flag, k, v)."""
    mixed = ((k * _MIX_KEY) ^ (v * _MIX_VALUE) ^ (k >> 29)) & SEAL_MASK
    return (mixed << FLAG_BITS) | flag

def _kind(word: int, k: Key, v: Value) -> int | None:
    flag = word & ((1 << FLAG_BITS) - 1)
    if flag not in (FLAG_INSERT, FLAG_DELETE) or word != seal(flag, k, v):
        return None
    return flag


class AppendNode(BaselineNode):
    """Leaf holding up to capacity log entries."""

    def __init__(self, arena: PmArena, offset: Offset, capacity: int) -> None:
        super().__init__(arena, offset, capacity * ENTRY_SIZE)
        self.capacity = capacity
        self.__count = self.__durable_length()

    @classmethod
    def create(cls, arena: PmArena, capacity: int) -> AppendNode:
        header, _ = cls._allocate(arena, capacity * ENTRY_SIZE)
        return cls(arena, header.offset, capacity)

    def __entries(self, count: int) -> list[tuple[int, int, int]]:
        words = self.arena.read_words(self.array, 0, ENTRY_WORDS * count)
        return [(int(e[0]), int(e[1]), int(e[2])) for e in words.reshape(-1, ENTRY_WORDS)]

    def __durable_length(self) -> int:
        for i, (word, k, v) in enumerate(self.__entries(self.capacity)):
            if _kind(word, k, v) is None:
                return i
        return self.capacity

    @property
    def count(self) -> int:
        return self.__count

    @property
    def is_full(self) -> bool:
        return self.__count >= self.capacity

    def live(self) -> dict[Key, Value]:
        """Replays the log into the pairs it currently holds."""
        out: dict[Key, Value] = {}
        for word, k, v in self.__entries(self.__count):
            if _kind(word, k, v) == FLAG_INSERT:
                out[k] = v
            else:
                out.pop(k, None)
        return out

    def items(self) -> list[KvPair]:
        return [KvPair(k, v) for k, v in sorted(self.live().items())]

    def append(self, flag: int, k: Key, v: Value) -> None:
        """Stores one entry flag last and persists it with one flush."""
        if self.is_full:
            logging.error("Node %d is full !", self.offset)
            raise NodeFullError

        at = self.__count * ENTRY_SIZE
        self.arena.store_sequence(self.array, ((at + 8, k), (at + 16, v), (at, seal(flag, k, v))))
        self.arena.flush_range(self.array, at, ENTRY_SIZE, tag="data")
        self.arena.fence()
        self.__count += 1

    def fill(self, pairs: list[KvPair]) -> None:
        """Writes pairs as insert entries of a fresh node and persists them."""
        stores: list[tuple[int, int]] = []
        for i, (k, v) in enumerate(pairs):
            at = i * ENTRY_SIZE
            stores.extend(((at + 8, k), (at + 16, v), (at, seal(FLAG_INSERT, k, v))))
        if pairs:
            self.arena.store_sequence(self.array, stores)
            self.arena.flush_range(self.array, 0, len(pairs) * ENTRY_SIZE, tag="data")
        self.arena.fence()
        self.__count = len(pairs)


def append_search(node: AppendNode, k: Key) -> SearchResult:
    live = node.live()
    if k in live:
        return SearchResult(True, node.count, live[k], (0, node.count))
    return SearchResult(False, node.count, None, (0, node.count))

def append_insert(node: AppendNode, k: Key, v: Value) -> None:
    """Appends an insert entry.

    Raises:
        ContractError: v is NULL.
        DuplicateKeyError: k is already live.
        NodeFullError: The log is full.
    """
    if v == NULL:
        logging.error("Cannot insert a NULL value !")
        raise ContractError
    if append_search(node, k).found:
        logging.error("Key %d already present !", k)
        raise DuplicateKeyError
    node.append(FLAG_INSERT, k, v)

def append_delete(node: AppendNode, k: Key) -> None:
    """Appends a delete entry.

    Raises:
        KeyNotFoundError: k is not live.
        NodeFullError: The log is full.
    """
    if not append_search(node, k).found:
        logging.error("Key %d not found !", k)
        raise KeyNotFoundError
    node.append(FLAG_DELETE, k, NULL)
