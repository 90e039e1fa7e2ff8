"""Baseline trees: a volatile leaf index over persistent baseline leaves.

Only the leaves live in the arena. Routing uses a sorted list of leaf
lower bounds held in memory, so the flushes measured are those of the
leaves alone. Leaves split when full and never merge. One mutex
serializes every operation.

Classes:
    BaselineKind
    BaselineTree
"""

from __future__ import annotations

import bisect
import logging
import threading
from enum import Enum
from typing import TYPE_CHECKING

from src.circ._consts import NULL, PAIR_SIZE
from src.circ.errors import ContractError, DuplicateKeyError
from src.circ.tree import OpOutcome, OutcomeKind

from ._consts import ENTRY_SIZE, FLAG_INSERT
from .append import AppendNode, append_delete, append_insert, append_search
from .linear import LinearNode, linear_delete, linear_insert, linear_search

if TYPE_CHECKING:
    from src.circ.node import KvPair, SearchResult
    from src.hinting import Key, Value
    from src.pmem import PmArena

MIN_LEAF_SLOTS = 4

Leaf = LinearNode | AppendNode


class BaselineKind(Enum):
    LINEAR = "linear"
    APPEND = "append"


class BaselineTree:
    """Tree of linear or append-only leaves with the same surface as CircTree."""

    def __init__(self, arena: PmArena, node_bytes: int, kind: BaselineKind) -> None:
        """Creates a tree with one empty leaf.

        Args:
            arena (PmArena): Arena for the leaves.
            node_bytes (int): Bytes of a leaf array.
            kind (BaselineKind): Leaf layout.

        Raises:
            ContractError: node_bytes holds fewer than 4 entries.
        """
        self.arena = arena
        self.kind = kind
        slot = PAIR_SIZE if kind is BaselineKind.LINEAR else ENTRY_SIZE
        self.capacity = node_bytes // slot
        if self.capacity < MIN_LEAF_SLOTS:
            logging.error("Node of %d bytes is too small for %s leaves !", node_bytes, kind.value)
            raise ContractError

        self.splits = 0
        self.merges = 0
        self.__mutex = threading.Lock()
        self.__lows: list[Key] = [0]
        self.__leaves: list[Leaf] = [self.__new_leaf()]
        logging.info("Created %s tree with %d slots per leaf", kind.value, self.capacity)

    def __new_leaf(self) -> Leaf:
        if self.kind is BaselineKind.LINEAR:
            return LinearNode.create(self.arena, self.capacity)
        return AppendNode.create(self.arena, self.capacity)

    def __find(self, leaf: Leaf, k: Key) -> SearchResult:
        if isinstance(leaf, LinearNode):
            return linear_search(leaf, k)
        return append_search(leaf, k)

    def __route(self, k: Key) -> int:
        return max(bisect.bisect_right(self.__lows, k) - 1, 0)

    def __relink(self, i: int, first: Leaf) -> None:
        if i > 0:
            self.__leaves[i - 1].set_sibling(first.offset)

    # --------------------------------------------------------------------- split

    def __split(self, i: int) -> bool:
        """Makes room in leaf i.

        Returns:
            bool: Whether the leaf became two.
        """
        leaf = self.__leaves[i]
        pairs = leaf.items()
        mid = len(pairs) // 2

        if isinstance(leaf, LinearNode):
            right = LinearNode.create(self.arena, self.capacity)
            right.fill(pairs[mid:])
            right.set_sibling(leaf.sibling)
            leaf.set_sibling(right.offset)
            leaf.set_count(mid)
            self.__leaves.insert(i + 1, right)
            self.__lows.insert(i + 1, pairs[mid].key)
            logging.debug("Split linear leaf %d at key %d", leaf.offset, pairs[mid].key)
            return True

        # Append leaves are rebuilt compacted, in two halves once enough is live
        if len(pairs) < self.capacity // 2:
            fresh = self.__new_leaf()
            fresh.fill(pairs)
            fresh.set_sibling(leaf.sibling)
            self.__relink(i, fresh)
            self.__leaves[i] = fresh
            logging.debug("Compacted append leaf %d into %d", leaf.offset, fresh.offset)
            return False

        lower, upper = self.__new_leaf(), self.__new_leaf()
        lower.fill(pairs[:mid])
        upper.fill(pairs[mid:])
        upper.set_sibling(leaf.sibling)
        lower.set_sibling(upper.offset)
        self.__relink(i, lower)
        self.__leaves[i:i + 1] = [lower, upper]
        self.__lows.insert(i + 1, pairs[mid].key)
        logging.debug("Split append leaf %d at key %d", leaf.offset, pairs[mid].key)
        return True

    def __room(self, k: Key) -> tuple[Leaf, bool]:
        """Leaf of k with a free slot, and whether a split was needed."""
        i = self.__route(k)
        split = False
        if self.__leaves[i].is_full:
            split = self.__split(i)
            if split:
                self.splits += 1
            i = self.__route(k)
        return self.__leaves[i], split

    # ---------------------------------------------------------------- operations

    def insert(self, k: Key, v: Value) -> OpOutcome:
        """Inserts a new key.

        Raises:
            ContractError: v is NULL.
            DuplicateKeyError: k is already present.
        """
        if v == NULL:
            logging.error("Cannot insert a NULL value !")
            raise ContractError
        self.arena.charge_op()

        with self.__mutex:
            if self.__find(self.__leaves[self.__route(k)], k).found:
                logging.error("Key %d already present !", k)
                raise DuplicateKeyError
            leaf, split = self.__room(k)
            if isinstance(leaf, LinearNode):
                linear_insert(self.arena, leaf, k, v)
            else:
                append_insert(leaf, k, v)
        return OpOutcome(OutcomeKind.SPLIT_PERFORMED if split else OutcomeKind.INSERTED)

    def search(self, k: Key) -> Value | None:
        return self.lookup(k).value

    def lookup(self, k: Key) -> OpOutcome:
        self.arena.charge_op()
        with self.__mutex:
            found = self.__find(self.__leaves[self.__route(k)], k)
        if found.found:
            return OpOutcome(OutcomeKind.FOUND, found.value)
        return OpOutcome(OutcomeKind.NOT_FOUND)

    def update(self, k: Key, v: Value) -> OpOutcome:
        """Replaces the value of an existing key.

        Linear leaves overwrite the value word in place, append leaves
        log a newer insert entry.
        """
        self.arena.charge_op()
        with self.__mutex:
            leaf = self.__leaves[self.__route(k)]
            found = self.__find(leaf, k)
            if not found.found:
                return OpOutcome(OutcomeKind.NOT_FOUND)
            if isinstance(leaf, LinearNode):
                self.arena.write_atomic8(leaf.array, found.pos * PAIR_SIZE + 8, v, tag="data")
                leaf.persist_slot(found.pos)
                self.arena.fence()
            else:
                leaf, _ = self.__room(k)
                leaf.append(FLAG_INSERT, k, v)
        return OpOutcome(OutcomeKind.UPDATED, found.value)

    def delete(self, k: Key) -> OpOutcome:
        self.arena.charge_op()
        with self.__mutex:
            leaf = self.__leaves[self.__route(k)]
            if not self.__find(leaf, k).found:
                return OpOutcome(OutcomeKind.NOT_FOUND)
            if isinstance(leaf, LinearNode):
                linear_delete(self.arena, leaf, k)
            else:
                leaf, _ = self.__room(k)
                append_delete(leaf, k)
        return OpOutcome(OutcomeKind.DELETED)

    def scan(self, lo: Key, hi: Key) -> list[KvPair]:
        """Pairs with lo <= key <= hi in key order.

        Raises:
            ContractError: lo > hi.
        """
        if lo > hi:
            logging.error("Empty scan bounds [%d, %d] !", lo, hi)
            raise ContractError
        with self.__mutex:
            first = self.__route(lo)
            last = self.__route(hi)
            leaves = self.__leaves[first:last + 1]
            return [p for leaf in leaves for p in leaf.items() if lo <= p.key <= hi]

    def items(self) -> list[KvPair]:
        with self.__mutex:
            return [p for leaf in self.__leaves for p in leaf.items()]

    def __len__(self) -> int:
        return len(self.items())

    @property
    def leaf_count(self) -> int:
        return len(self.__leaves)
