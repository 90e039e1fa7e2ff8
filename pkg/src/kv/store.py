"""Key-value store over a tree index.

A value is a record of ten 100-byte fields reached through an array of
field pointers. The record is durable before its key enters the index,
and a field update writes the new field elsewhere before swinging its
pointer.

Classes:
    ValueRecord
    StoreStats
    KvStore

Functions:
    parse_ycsb_key(key: str) -> Key
"""

from __future__ import annotations

import logging
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from src.circ.errors import ContractError
from src.circ.tree import OpOutcome, OutcomeKind
from src.pmem import Handle

from ._consts import FIELD_COUNT, FIELD_SIZE, KEY_PREFIX, RECORD_ALIGN

if TYPE_CHECKING:
    from collections.abc import Sequence

    from src.hinting import Index, Key, Offset
    from src.pmem import PmArena

POINTERS_SIZE = FIELD_COUNT * 8


def parse_ycsb_key(key: str) -> Key:
    """Strips the "user" prefix of a YCSB key to an unsigned integer.

    Raises:
        ContractError: Not a YCSB key, or out of the 64 bits range.
    """
    digits = key.removeprefix(KEY_PREFIX)
    if digits == key or not digits.isdigit() or int(digits) >= 1 << 64:
        logging.error("Bad YCSB key %r !", key)
        raise ContractError
    return int(digits)


@dataclass(frozen=True)
class ValueRecord:
    """The pointer array of one stored value."""

    pointers: Handle

    @classmethod
    def at(cls, offset: Offset) -> ValueRecord:
        return cls(Handle(offset, POINTERS_SIZE))

    def field_handle(self, arena: PmArena, index: int) -> Handle:
        return Handle(arena.read_word(self.pointers, index * 8), FIELD_SIZE)

    def read(self, arena: PmArena) -> bytes:
        return b"".join(
            arena.read(self.field_handle(arena, i), 0, FIELD_SIZE)
            for i in range(FIELD_COUNT)
        )


@dataclass
class StoreStats:
    """Virtual latencies of every operation, by kind, shared by threads."""

    latencies: dict[str, list[int]] = field(default_factory=lambda: defaultdict(list))
    misses: int = 0
    _mutex: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, kind: str, ns: int) -> None:
        with self._mutex:
            self.latencies[kind].append(ns)

    def miss(self) -> None:
        with self._mutex:
            self.misses += 1

    @property
    def counts(self) -> dict[str, int]:
        return {kind: len(lats) for kind, lats in self.latencies.items()}


class KvStore:
    """Stores records of ten fields behind a tree of any kind."""

    def __init__(self, tree: Index) -> None:
        self.tree = tree
        self.arena = tree.arena
        self.stats = StoreStats()

    def __timed(self, kind: str, start: int) -> None:
        self.stats.record(kind, self.arena.thread_clock() - start)

    def __write_field(self, payload: bytes) -> Handle:
        region = self.arena.alloc(FIELD_SIZE, RECORD_ALIGN)
        self.arena.write(region, 0, payload, tag="value")
        self.arena.flush_range(region, 0, FIELD_SIZE, tag="value")
        return region

    @staticmethod
    def __check(payload: bytes) -> None:
        if len(payload) != FIELD_SIZE:
            logging.error("A field holds %d bytes, got %d !", FIELD_SIZE, len(payload))
            raise ContractError

    def put(self, k: Key, fields: Sequence[bytes]) -> OpOutcome:
        """Persists a record, then indexes it under k.

        Args:
            k (Key): New key.
            fields (Sequence[bytes]): Ten payloads of 100 bytes.

        Raises:
            ContractError: Wrong number or size of fields.
            DuplicateKeyError: k is already stored, the record leaks.

        Returns:
            OpOutcome: The outcome of the index insert.
        """
        if len(fields) != FIELD_COUNT:
            logging.error("A record has %d fields, got %d !", FIELD_COUNT, len(fields))
            raise ContractError
        for payload in fields:
            self.__check(payload)

        start = self.arena.thread_clock()
        regions = [self.__write_field(payload) for payload in fields]
        pointers = self.arena.alloc(POINTERS_SIZE, RECORD_ALIGN)
        self.arena.store_sequence(
            pointers,
            [(i * 8, region.offset) for i, region in enumerate(regions)],
            tag="value",
        )
        self.arena.flush_range(pointers, 0, POINTERS_SIZE, tag="value")
        self.arena.fence()

        outcome = self.tree.insert(k, pointers.offset)
        self.__timed("insert", start)
        return outcome

    def get(self, k: Key) -> bytes | None:
        """The 1000 bytes stored under k, None when absent."""
        start = self.arena.thread_clock()
        offset = self.tree.search(k)
        value = None if offset is None else ValueRecord.at(offset).read(self.arena)
        self.__timed("search", start)
        return value

    def update_field(self, k: Key, index: int, payload: bytes) -> OpOutcome:
        """Copy-on-write update of one field of an existing record.

        A missing key is counted and reported, nothing is inserted.

        Raises:
            ContractError: Bad field index or payload size.

        Returns:
            OpOutcome: UPDATED or NOT_FOUND.
        """
        if not 0 <= index < FIELD_COUNT:
            logging.error("Field index %d out of range !", index)
            raise ContractError
        self.__check(payload)

        start = self.arena.thread_clock()
        offset = self.tree.search(k)
        if offset is None:
            self.stats.miss()
            self.__timed("update", start)
            logging.debug("Update of missing key %d", k)
            return OpOutcome(OutcomeKind.NOT_FOUND)

        record = ValueRecord.at(offset)
        region = self.__write_field(payload)
        self.arena.fence()
        self.arena.write_atomic8(record.pointers, index * 8, region.offset, tag="value")
        self.arena.flush_line(record.pointers, index * 8, tag="value")
        self.arena.fence()
        self.__timed("update", start)
        return OpOutcome(OutcomeKind.UPDATED, offset)
