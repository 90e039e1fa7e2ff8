"""The circular node and its in-place operations.

A node is a header block plus a power of two array of 16-byte pairs.
Valid pairs live at slots base, base+1, ..., base+nkeys-1 taken modulo
the capacity, and every other slot holds a NULL value.

Classes:
    KvPair
    SearchResult
    CircNode

Functions:
    circ_index(b: int, i: int, capacity: int) -> int
    node_search(node: CircNode, k: Key) -> SearchResult
    node_search_linear(node: CircNode, k: Key) -> SearchResult
    node_insert(arena: PmArena, node: CircNode, k: Key, v: Value) -> int
    node_delete(arena: PmArena, node: CircNode, k: Key) -> int
    node_update(node: CircNode, k: Key, v: Value) -> Value
    node_logical_view(node: CircNode) -> list[KvPair]
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from src.pmem import Handle

from ._consts import HEADER_BYTES, INFO_BYTES, NULL, PAIR_SIZE
from ._layout import (
    HDR_ARRAY,
    HDR_BN,
    HDR_LOCK,
    HDR_SIBLING,
    INFO_FENCE,
    INFO_LEFTMOST,
    INFO_LEVEL,
    pack_bn,
    unpack_bn,
)
from .errors import (
    ContractError,
    DuplicateKeyError,
    KeyNotFoundError,
    NodeFullError,
    NotPowerOfTwoError,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from src.hinting import Key, Offset, Value
    from src.pmem import PmArena


class KvPair(NamedTuple):
    key: Key
    value: Value


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a node search.

    Attributes:
        found (bool): Whether the key is present.
        pos (int): Logical position of the key, or of the first greater
            key when absent.
        value (Value | None): The value of a found key.
        scanned (tuple[int, int]): Physical slots [start, stop) read by
            the search, wrapping when stop < start.
    """

    found: bool
    pos: int
    value: Value | None = None
    scanned: tuple[int, int] = (0, 0)


def _is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0

def circ_index(b: int, i: int, capacity: int) -> int:
    """Physical slot of logical offset i from base b.

    Args:
        b (int): Base slot.
        i (int): Logical offset, may be negative.
        capacity (int): Array capacity, a power of two.

    Raises:
        NotPowerOfTwoError: capacity is not a power of two above one.

    Returns:
        int: (b + i) mod capacity.
    """
    if capacity < 2 or not _is_power_of_two(capacity):  # noqa: PLR2004
        logging.error("Capacity %d is not a power of two !", capacity)
        raise NotPowerOfTwoError
    return (b + i) & (capacity - 1)


class CircNode:
    """Accessor over one node living in an arena.

    Reads go to the shadow image. Setters named `set_*` are durable
    8-byte atomic updates, each flushed and fenced.

    An ordered node persists every data store before issuing the next
    one, so a crash that keeps any subset of the dirty words still
    leaves a program-order prefix. Otherwise stores to one line are
    batched and flushed together, which is only sound when a line
    reaches the media in store order.
    """

    def __init__(
        self,
        arena: PmArena,
        offset: Offset,
        capacity: int,
        *,
        ordered: bool = False,
    ) -> None:
        self.arena = arena
        self.offset = offset
        self.capacity = capacity
        self.mask = capacity - 1
        self.ordered = ordered
        self.header = Handle(offset, HEADER_BYTES)

        array = arena.read_word(self.header, HDR_ARRAY)
        self.array = Handle(array, capacity * PAIR_SIZE)
        self.info = Handle(array - arena.line_size, INFO_BYTES)

    @classmethod
    def create(
        cls,
        arena: PmArena,
        capacity: int,
        level: int,
        *,
        ordered: bool = False,
    ) -> CircNode:
        """Allocates a zeroed node, its header words still unflushed.

        The info words take the line in front of the pair array, so the
        array stays line aligned.

        Raises:
            NotPowerOfTwoError: capacity is not a power of two.
        """
        if not _is_power_of_two(capacity):
            logging.error("Capacity %d is not a power of two !", capacity)
            raise NotPowerOfTwoError

        header = arena.alloc(HEADER_BYTES)
        body = arena.alloc(arena.line_size + capacity * PAIR_SIZE)
        array = body.offset + arena.line_size
        arena.write_word(header, HDR_ARRAY, array, tag="header")
        arena.write_word(Handle(body.offset, INFO_BYTES), INFO_LEVEL, level, tag="header")

        logging.debug(
            "New level %d node at %d, array at %d",
            level, header.offset, array,
        )
        return cls(arena, header.offset, capacity, ordered=ordered)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CircNode) and other.offset == self.offset

    def __hash__(self) -> int:
        return hash(self.offset)

    def __repr__(self) -> str:
        b, n = self.bn
        return f"CircNode(@{self.offset}, level={self.level}, b={b}, n={n})"

    # ------------------------------------------------------------------ header

    def __word(self, off: int) -> int:
        return self.arena.read_word(self.header, off)

    def __info(self, off: int) -> int:
        return self.arena.read_word(self.info, off)

    @property
    def bn(self) -> tuple[int, int]:
        return unpack_bn(self.__word(HDR_BN))

    @property
    def base(self) -> int:
        return self.bn[0]

    @property
    def nkeys(self) -> int:
        return self.bn[1]

    @property
    def sibling(self) -> Offset:
        return self.__word(HDR_SIBLING)

    @property
    def leftmost(self) -> Offset:
        return self.__info(INFO_LEFTMOST)

    @property
    def level(self) -> int:
        return self.__info(INFO_LEVEL)

    @property
    def is_leaf(self) -> bool:
        return self.level == 0

    @property
    def fence_key(self) -> Key:
        return self.__info(INFO_FENCE)

    @property
    def lock_word(self) -> int:
        return self.__word(HDR_LOCK)

    @property
    def max_keys(self) -> int:
        """Leaves fill every slot, internal nodes keep one for the leftmost child."""
        return self.capacity if self.is_leaf else self.capacity - 1

    def __swing(self, h: Handle, off: int, value: int) -> None:
        self.arena.write_atomic8(h, off, value, tag="header")
        self.arena.flush_line(h, off, tag="header")
        self.arena.fence()

    def set_bn(self, base: int, nkeys: int) -> None:
        self.__swing(self.header, HDR_BN, pack_bn(base & self.mask, nkeys))

    def set_sibling(self, offset: Offset) -> None:
        self.__swing(self.header, HDR_SIBLING, offset)

    def set_leftmost(self, offset: Offset) -> None:
        self.__swing(self.info, INFO_LEFTMOST, offset)

    def set_fence(self, key: Key) -> None:
        self.__swing(self.info, INFO_FENCE, key)

    def format(  # noqa: A003
        self,
        nkeys: int,
        sibling: Offset,
        fence: Key,
        leftmost: Offset = NULL,
    ) -> None:
        """Fills a fresh header with base 0, then persists it."""
        self.arena.write_atomic8(self.header, HDR_BN, pack_bn(0, nkeys), tag="header")
        self.arena.write_word(self.header, HDR_SIBLING, sibling, tag="header")
        self.arena.write_word(self.info, INFO_LEFTMOST, leftmost, tag="header")
        self.arena.write_word(self.info, INFO_FENCE, fence, tag="header")
        self.arena.flush_range(self.header, 0, HEADER_BYTES, tag="header")
        self.arena.flush_range(self.info, 0, INFO_BYTES, tag="header")
        self.arena.fence()

    def mark_locked(self, locked: bool) -> None:  # noqa: FBT001
        self.arena.store_volatile(self.header, HDR_LOCK, int(locked))

    # ------------------------------------------------------------------- slots

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Keys and values of every physical slot."""
        words = self.arena.read_words(self.array, 0, 2 * self.capacity)
        return words[0::2], words[1::2]

    def slots(self, b: int, n: int) -> np.ndarray:
        """Physical slots of logical positions 0..n-1 from base b."""
        return (b + np.arange(n)) & self.mask

    def starts_line(self, slot: int) -> bool:
        return self.arena.is_line_start(self.array, slot * PAIR_SIZE)

    def store(self, items: Sequence[tuple[int, int]]) -> None:
        """Issues data stores, (array offset, value), in order.

        Ordered nodes flush and fence after each one.
        """
        if not self.ordered:
            self.arena.store_sequence(self.array, items)
            return
        for off, value in items:
            self.arena.write_word(self.array, off, value)
            self.arena.flush_line(self.array, off, tag="data")
            self.arena.fence()

    def persist_slot(self, slot: int) -> None:
        if self.ordered:
            return
        self.arena.flush_line(self.array, slot * PAIR_SIZE, tag="data")
        self.arena.fence()

    def write_pair(self, slot: int, k: Key, v: Value) -> None:
        """Stores key then value, unflushed."""
        self.store(((slot * PAIR_SIZE, k), (slot * PAIR_SIZE + 8, v)))

    def clear_slot(self, slot: int) -> None:
        """Stores NULL value then NULL key, unflushed."""
        self.store(((slot * PAIR_SIZE + 8, NULL), (slot * PAIR_SIZE, NULL)))

    def set_value(self, slot: int, v: Value) -> None:
        self.arena.write_atomic8(self.array, slot * PAIR_SIZE + 8, v, tag="data")
        self.arena.flush_line(self.array, slot * PAIR_SIZE, tag="data")
        self.arena.fence()

    def slot_of_value(self, v: Value) -> int | None:
        """Physical slot of a valid pair holding v."""
        b, n = self.bn
        slots = self.slots(b, n)
        _, vals = self.pairs()
        hits = np.flatnonzero(vals[slots] == np.uint64(v))
        return int(slots[hits[0]]) if len(hits) else None

    def valid_values(self, view: tuple[int, int] | None = None) -> set[Value]:
        b, n = view or self.bn
        _, vals = self.pairs()
        return {int(x) for x in vals[self.slots(b, n)] if x != NULL}

    def raw_values(self) -> set[Value]:
        """Every non-NULL value physically present, valid or not."""
        _, vals = self.pairs()
        return {int(x) for x in vals if x != NULL}


def _scan(keys: np.ndarray, vals: np.ndarray, start: int, stop: int, first: int, k: Key) -> SearchResult:
    seg = keys[start:stop]
    hits = np.flatnonzero(seg >= np.uint64(k))
    i = int(hits[0]) if len(hits) else len(seg)
    if i < len(seg) and int(seg[i]) == k:
        return SearchResult(True, first + i, int(vals[start + i]), (start, stop))
    return SearchResult(False, first + i, None, (start, stop))

def node_search(
    node: CircNode,
    k: Key,
    *,
    view: tuple[int, int] | None = None,
) -> SearchResult:
    """Scans one physically contiguous segment of the node.

    A wrapped node is two segments, [base, N) holding the smaller keys
    and [0, base+nkeys-N) holding the greater ones. Comparing k with
    the key at slot 0 picks the only segment that can hold it.

    Args:
        node (CircNode): The node.
        k (Key): Searched key.
        view (tuple[int, int] | None): (base, nkeys) to use instead of
            the header.

    Returns:
        SearchResult: Logical position of k, or insertion position.
    """
    b, n = view or node.bn
    if n == 0:
        return SearchResult(False, 0, None, (b, b))

    keys, vals = node.pairs()
    size = node.capacity
    if b + n <= size:
        return _scan(keys, vals, b, b + n, 0, k)
    if k >= int(keys[0]):
        return _scan(keys, vals, 0, b + n - size, size - b, k)
    return _scan(keys, vals, b, size, 0, k)

def node_search_linear(
    node: CircNode,
    k: Key,
    *,
    view: tuple[int, int] | None = None,
) -> SearchResult:
    """Scans from the base location in logical order, ignoring segments."""
    b, n = view or node.bn
    keys, vals = node.pairs()
    slots = node.slots(b, n)
    logical = keys[slots]

    hits = np.flatnonzero(logical >= np.uint64(k))
    i = int(hits[0]) if len(hits) else n
    scanned = (b, (b + n) & node.mask)
    if i < n and int(logical[i]) == k:
        return SearchResult(True, i, int(vals[slots[i]]), scanned)
    return SearchResult(False, i, None, scanned)

def node_logical_view(node: CircNode, view: tuple[int, int] | None = None) -> list[KvPair]:
    """Materializes the valid pairs in logical order."""
    b, n = view or node.bn
    keys, vals = node.pairs()
    slots = node.slots(b, n)
    return [KvPair(int(k), int(v)) for k, v in zip(keys[slots], vals[slots], strict=True)]

def _move(
    node: CircNode,
    moves: Sequence[tuple[int, int]],
    keys: np.ndarray,
    vals: np.ndarray,
    *,
    value_first: bool,
    flush_after: Callable[[int, int], bool],
) -> None:
    """Copies pairs src -> dst in order, one open data line at a time.

    flush_after(src, dst) tells when the line of dst is complete.
    """
    pending: list[tuple[int, int]] = []
    for src, dst in moves:
        k_word = (dst * PAIR_SIZE, int(keys[src]))
        v_word = (dst * PAIR_SIZE + 8, int(vals[src]))
        pending.extend((v_word, k_word) if value_first else (k_word, v_word))
        if flush_after(src, dst):
            node.store(pending)
            pending = []
            node.persist_slot(dst)
    if pending:
        node.store(pending)

def node_insert(
    arena: PmArena,
    node: CircNode,
    k: Key,
    v: Value,
    *,
    view: tuple[int, int] | None = None,
) -> int:
    """Inserts a pair, shifting the smaller side of the node.

    Left when k is smaller than the middle key: every smaller pair moves
    one slot left and the base moves with them. Right otherwise: every
    greater pair moves one slot right. Moved pairs and the new pair are
    persisted before the single atomic (base, nkeys) update.

    Args:
        arena (PmArena): The arena holding the node.
        node (CircNode): Target node, locked by the caller.
        k (Key): New key.
        v (Value): New value, not NULL.
        view (tuple[int, int] | None): (base, nkeys) to use instead of
            the header, for a node halfway through a split.

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

    b, n = view or node.bn
    if n >= node.max_keys:
        logging.error("Node %d is full !", node.offset)
        raise NodeFullError

    found = node_search(node, k, view=(b, n))
    if found.found:
        logging.error("Key %d already present !", k)
        raise DuplicateKeyError

    keys, vals = node.pairs()
    mask, pos = node.mask, found.pos

    if n > 0 and k < int(keys[(b + n // 2) & mask]):
        moves = [((b + i) & mask, (b + i - 1) & mask) for i in range(pos)]
        _move(
            node, moves, keys, vals,
            value_first = False,
            flush_after = lambda src, _dst: node.starts_line(src),
        )
        slot, new_bn = (b + pos - 1) & mask, (b - 1, n + 1)
    else:
        moves = [((b + i) & mask, (b + i + 1) & mask) for i in range(n - 1, pos - 1, -1)]
        _move(
            node, moves, keys, vals,
            value_first = False,
            flush_after = lambda _src, dst: node.starts_line(dst),
        )
        slot, new_bn = (b + pos) & mask, (b, n + 1)

    node.write_pair(slot, k, v)
    node.persist_slot(slot)
    node.set_bn(*new_bn)

    arena.count_shifts(len(moves))
    return len(moves)

def node_delete(arena: PmArena, node: CircNode, k: Key) -> int:
    """Removes a key, shifting the smaller side toward the gap.

    End keys are cleared in place. A middle key at or past the middle
    position pulls the greater pairs left, otherwise the smaller pairs
    move right and the base advances.

    Raises:
        KeyNotFoundError: k is absent.

    Returns:
        int: Number of pairs shifted.
    """
    b, n = node.bn
    found = node_search(node, k)
    if not found.found:
        logging.error("Key %d is not in node %d !", k, node.offset)
        raise KeyNotFoundError

    keys, vals = node.pairs()
    mask, pos = node.mask, found.pos
    moves: list[tuple[int, int]] = []

    if pos == 0:
        cleared, new_bn = b, (b + 1, n - 1)
    elif pos == n - 1:
        cleared, new_bn = (b + n - 1) & mask, (b, n - 1)
    elif pos >= n // 2:
        moves = [((b + i) & mask, (b + i - 1) & mask) for i in range(pos + 1, n)]
        _move(
            node, moves, keys, vals,
            value_first = True,
            flush_after = lambda src, _dst: node.starts_line(src),
        )
        cleared, new_bn = (b + n - 1) & mask, (b, n - 1)
    else:
        moves = [((b + i) & mask, (b + i + 1) & mask) for i in range(pos - 1, -1, -1)]
        _move(
            node, moves, keys, vals,
            value_first = True,
            flush_after = lambda _src, dst: node.starts_line(dst),
        )
        cleared, new_bn = b, (b + 1, n - 1)

    node.clear_slot(cleared)
    node.persist_slot(cleared)
    node.set_bn(*new_bn)

    arena.count_shifts(len(moves))
    return len(moves)

def node_update(node: CircNode, k: Key, v: Value) -> Value:
    """Swings the value of an existing key with one atomic write.

    Raises:
        ContractError: v is NULL.
        KeyNotFoundError: k is absent.

    Returns:
        Value: The previous value.
    """
    if v == NULL:
        logging.error("Cannot store a NULL value !")
        raise ContractError

    found = node_search(node, k)
    if not found.found or found.value is None:
        logging.error("Key %d is not in node %d !", k, node.offset)
        raise KeyNotFoundError

    node.set_value(circ_index(node.base, found.pos, node.capacity), v)
    return found.value
