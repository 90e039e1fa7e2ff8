"""The circular-node B+-tree.

Classes:
    OutcomeKind
    OpOutcome
    CircTree
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from src.pmem import CrashModel

from ._consts import MIN_CAPACITY, NULL
from ._layout import Superblock
from ._locks import NodeLocks, TreeLatch
from ._smo import leaf_merge, leaf_split
from .errors import ContractError, CorruptionError, DuplicateKeyError, NotPowerOfTwoError
from .node import (
    CircNode,
    KvPair,
    circ_index,
    node_delete,
    node_insert,
    node_logical_view,
    node_search,
    node_search_linear,
    node_update,
)
from .recovery import RecoveryReport, recover

if TYPE_CHECKING:
    from types import TracebackType

    from src.hinting import Key, Offset, Value
    from src.pmem import PmArena


class OutcomeKind(Enum):
    INSERTED = "inserted"
    DELETED = "deleted"
    FOUND = "found"
    NOT_FOUND = "not_found"
    UPDATED = "updated"
    SPLIT_PERFORMED = "split_performed"
    MERGE_PERFORMED = "merge_performed"


@dataclass(frozen=True)
class OpOutcome:
    kind: OutcomeKind
    value: Value | None = None


class CircTree:  # pylint: disable=too-many-public-methods
    """B+-tree of circular nodes living in a persistent arena.

    Use `create` on an empty arena or `open` on one that already holds
    a tree, and `close` (or a with block) for a clean shutdown. Opening
    a tree whose start flag is still set runs recovery first.

    The crash model tells how the tree persists its data stores. Under
    LINE, stores to one cache line are flushed together, as in the
    single-node algorithms. Under WORD, each store is flushed before
    the next, which costs more flushes but survives a crash keeping
    any subset of the unflushed words.
    """

    def __init__(
        self,
        arena: PmArena,
        superblock: Superblock,
        *,
        linear_search: bool = False,
        crash_model: CrashModel = CrashModel.LINE,
    ) -> None:
        self.arena = arena
        self.superblock = superblock
        self.capacity = superblock.capacity
        self.linear_search = linear_search
        self.search_node = node_search_linear if linear_search else node_search
        self.crash_model = crash_model
        self.ordered = crash_model is CrashModel.WORD

        self.latch = TreeLatch()
        self.locks = NodeLocks()
        self.root_growth = threading.Condition()
        self.__counters = threading.Lock()

        self.splits = 0
        self.merges = 0
        self.last_recovery: RecoveryReport | None = None

    @classmethod
    def create(
        cls,
        arena: PmArena,
        capacity: int,
        *,
        linear_search: bool = False,
        crash_model: CrashModel = CrashModel.LINE,
    ) -> CircTree:
        """Formats a new tree with one empty leaf and opens it.

        Args:
            arena (PmArena): An arena with no allocation yet.
            capacity (int): Slots per node, a power of two of at least 8.
            linear_search (bool): Scan nodes linearly from the base.
            crash_model (CrashModel): Crashes the stores must survive.

        Raises:
            NotPowerOfTwoError: Bad capacity.

        Returns:
            CircTree: The open tree.
        """
        if capacity < MIN_CAPACITY or capacity & (capacity - 1):
            logging.error("Node capacity %d is not a power of two >= %d !", capacity, MIN_CAPACITY)
            raise NotPowerOfTwoError

        superblock = Superblock.create(arena, capacity)
        tree = cls(arena, superblock, linear_search=linear_search, crash_model=crash_model)
        leaf = tree.new_node(0)
        leaf.format(0, NULL, 0)
        superblock.persist()
        superblock.root = leaf.offset
        superblock.leaf_head = leaf.offset
        superblock.height = 1

        superblock.start_flag = True
        logging.info("Created tree with %d slots per node", capacity)
        return tree

    @classmethod
    def open(  # noqa: A003
        cls,
        arena: PmArena,
        *,
        linear_search: bool = False,
        crash_model: CrashModel = CrashModel.LINE,
    ) -> CircTree:
        """Opens the tree of an arena, recovering it after a crash.

        Raises:
            CorruptionError: No tree, or an unrecoverable image.

        Returns:
            CircTree: The open tree, `last_recovery` set if recovery ran.
        """
        superblock = Superblock(arena)
        superblock.check()

        tree = cls(arena, superblock, linear_search=linear_search, crash_model=crash_model)
        if superblock.start_flag:
            logging.info("Start flag found, recovering")
            tree.last_recovery = recover(tree)
        superblock.start_flag = True
        return tree

    def close(self) -> None:
        self.superblock.start_flag = False

    def __enter__(self) -> CircTree:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        self.close()

    def count_split(self) -> None:
        with self.__counters:
            self.splits += 1

    def __count_merge(self) -> None:
        with self.__counters:
            self.merges += 1

    # ----------------------------------------------------------------- navigation

    def node(self, offset: Offset) -> CircNode:
        return CircNode(self.arena, offset, self.capacity, ordered=self.ordered)

    def new_node(self, level: int) -> CircNode:
        return CircNode.create(self.arena, self.capacity, level, ordered=self.ordered)

    @property
    def root(self) -> CircNode:
        return self.node(self.superblock.root)

    @property
    def height(self) -> int:
        return self.root.level + 1

    def child_for(self, node: CircNode, k: Key) -> Offset:
        """Child of an internal node whose range holds k."""
        found = self.search_node(node, k)
        idx = found.pos + 1 if found.found else found.pos
        if idx == 0:
            return node.leftmost
        if found.found and found.value is not None:
            return found.value
        _, vals = node.pairs()
        return int(vals[circ_index(node.base, idx - 1, self.capacity)])

    def move_right(self, node: CircNode, k: Key) -> CircNode:
        """Follows siblings while k is at or past the sibling's fence."""
        while node.sibling != NULL:
            sibling = self.node(node.sibling)
            if k < sibling.fence_key:
                break
            node = sibling
        return node

    def descend(self, k: Key, level: int = 0) -> list[CircNode]:
        """Path from the root to the node of the given level covering k."""
        node = self.root
        path = []
        while True:
            node = self.move_right(node, k)
            path.append(node)
            if node.level <= level:
                return path
            node = self.node(self.child_for(node, k))

    def lock_covering(self, k: Key, level: int = 0, *, start: CircNode | None = None) -> CircNode:
        """Locks the node of a level whose range holds k.

        The search starts from start, or from a lock-free descent. A
        split may have moved k's range right before the lock was taken,
        so the lock is handed to the right sibling until its fence is
        past k.

        Returns:
            CircNode: The covering node, locked.
        """
        node = start if start is not None else self.descend(k, level)[-1]
        self.locks.acquire(node)
        while node.sibling != NULL:
            sibling = self.node(node.sibling)
            if k < sibling.fence_key:
                break
            self.locks.acquire(sibling)
            self.locks.release(node)
            node = sibling
        return node

    def level_chain(self, level: int) -> list[CircNode]:
        """Nodes of one level in sibling order."""
        if level == 0:
            offset = self.superblock.leaf_head
        else:
            node = self.root
            while node.level > level:
                node = self.node(node.leftmost)
            offset = node.offset

        chain = []
        while offset != NULL:
            node = self.node(offset)
            chain.append(node)
            offset = node.sibling
        return chain

    def children(self, node: CircNode) -> list[Offset]:
        """Child offsets of an internal node in key order."""
        return [node.leftmost] + [pair.value for pair in node_logical_view(node)]

    def predecessor(self, path: list[CircNode]) -> CircNode | None:
        """Leaf right before the last node of path, None if it is the first."""
        for depth in range(len(path) - 1, 0, -1):
            parent, child = path[depth - 1], path[depth]
            kids = self.children(parent)
            idx = kids.index(child.offset)
            if idx == 0:
                continue
            node = self.node(kids[idx - 1])
            while not node.is_leaf:
                node = self.node(self.children(node)[-1])
            return node
        return None

    # ----------------------------------------------------------------- operations

    def insert(self, k: Key, v: Value) -> OpOutcome:
        """Inserts a new key, splitting its leaf when full.

        Splits hold the leaf's lock while the parent is updated, and
        run alongside other operations.

        Raises:
            ContractError: v is NULL.
            DuplicateKeyError: k is already present.

        Returns:
            OpOutcome: INSERTED or SPLIT_PERFORMED.
        """
        if v == NULL:
            logging.error("Cannot insert a NULL value !")
            raise ContractError
        self.arena.charge_op()

        with self.latch.shared():
            leaf = self.lock_covering(k)
            try:
                if self.search_node(leaf, k).found:
                    logging.error("Key %d already present !", k)
                    raise DuplicateKeyError
                if leaf.nkeys < leaf.max_keys:
                    node_insert(self.arena, leaf, k, v)
                    return OpOutcome(OutcomeKind.INSERTED)
                leaf_split(self, leaf, k, v)
            finally:
                self.locks.release(leaf)
        return OpOutcome(OutcomeKind.SPLIT_PERFORMED)

    def search(self, k: Key) -> Value | None:
        outcome = self.lookup(k)
        return outcome.value

    def lookup(self, k: Key) -> OpOutcome:
        """Point query, FOUND with the value or NOT_FOUND."""
        self.arena.charge_op()
        with self.latch.shared():
            leaf = self.lock_covering(k)
            try:
                found = self.search_node(leaf, k)
            finally:
                self.locks.release(leaf)
        if found.found:
            return OpOutcome(OutcomeKind.FOUND, found.value)
        return OpOutcome(OutcomeKind.NOT_FOUND)

    def update(self, k: Key, v: Value) -> OpOutcome:
        """Atomically replaces the value of an existing key.

        Returns:
            OpOutcome: UPDATED with the previous value, or NOT_FOUND.
        """
        self.arena.charge_op()
        with self.latch.shared():
            leaf = self.lock_covering(k)
            try:
                if not self.search_node(leaf, k).found:
                    return OpOutcome(OutcomeKind.NOT_FOUND)
                old = node_update(leaf, k, v)
            finally:
                self.locks.release(leaf)
        return OpOutcome(OutcomeKind.UPDATED, old)

    def delete(self, k: Key) -> OpOutcome:
        """Deletes k, merging its leaf into the right sibling when underutilized.

        Merges rewrite three nodes and the leaf list, they wait for the
        latch to be free and hold it exclusive.

        Returns:
            OpOutcome: DELETED, MERGE_PERFORMED or NOT_FOUND.
        """
        self.arena.charge_op()
        half = self.capacity // 2

        with self.latch.shared():
            leaf = self.lock_covering(k)
            try:
                if not self.search_node(leaf, k).found:
                    return OpOutcome(OutcomeKind.NOT_FOUND)
                if leaf.nkeys - 1 >= half or leaf.sibling == NULL:
                    node_delete(self.arena, leaf, k)
                    return OpOutcome(OutcomeKind.DELETED)
            finally:
                self.locks.release(leaf)

        with self.latch.exclusive():
            path = self.descend(k)
            leaf = path[-1]
            with self.locks.hold(leaf):
                if not self.search_node(leaf, k).found:
                    return OpOutcome(OutcomeKind.NOT_FOUND)
                node_delete(self.arena, leaf, k)
                if leaf.nkeys < half and self.__try_merge(path):
                    self.__count_merge()
                    return OpOutcome(OutcomeKind.MERGE_PERFORMED)
        return OpOutcome(OutcomeKind.DELETED)

    def __try_merge(self, path: list[CircNode]) -> bool:
        leaf = path[-1]
        if len(path) < 2 or leaf.sibling == NULL:  # noqa: PLR2004
            return False

        parent, right = path[-2], self.node(leaf.sibling)
        if parent.slot_of_value(right.offset) is None:
            return False
        if leaf.nkeys + right.nkeys > self.capacity:
            return False

        if not self.locks.acquire(right, blocking=False):
            return False
        try:
            pred = self.predecessor(path)
            with self.locks.hold(*(n for n in (parent, pred) if n is not None)):
                leaf_merge(self, path, leaf, right, pred)
        finally:
            self.locks.release(right)
        return True

    def scan(self, lo: Key, hi: Key) -> list[KvPair]:
        """Pairs with lo <= key <= hi in key order.

        Raises:
            ContractError: lo > hi.
        """
        if lo > hi:
            logging.error("Empty scan bounds [%d, %d] !", lo, hi)
            raise ContractError

        out: list[KvPair] = []
        with self.latch.shared():
            leaf: CircNode | None = self.descend(lo)[-1]
            while leaf is not None:
                with self.locks.hold(leaf):
                    pairs = node_logical_view(leaf)
                    sibling = leaf.sibling
                out.extend(p for p in pairs if lo <= p.key <= hi)
                if pairs and pairs[-1].key > hi:
                    break
                leaf = self.node(sibling) if sibling != NULL else None
        return out

    def items(self) -> list[KvPair]:
        """Every pair, walking the leaf list from its head."""
        return [pair for leaf in self.level_chain(0) for pair in node_logical_view(leaf)]

    def __len__(self) -> int:
        return sum(leaf.nkeys for leaf in self.level_chain(0))

    # ------------------------------------------------------------------ checking

    def verify(self) -> None:
        """Checks structural soundness.

        The leaf list is sorted and holds exactly the leaves reachable
        from the root, every level is uniform, keys and low fences
        respect their parents' separators, slots outside the valid
        range are NULL, and no value appears twice among the leaves.

        Raises:
            CorruptionError: A property does not hold.
        """
        reached: list[Offset] = []
        self.__verify_subtree(self.root, None, None, self.height - 1, reached)

        chain = [leaf.offset for leaf in self.level_chain(0)]
        if chain != reached:
            self.__fail("leaf list differs from the leaves reachable from the root")

        pairs = self.items()
        keys = [p.key for p in pairs]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            self.__fail("leaf list keys are not strictly increasing")
        if len({p.value for p in pairs}) != len(pairs):
            self.__fail("a value appears twice among the leaves")

    def __verify_subtree(  # noqa: PLR0913
        self,
        node: CircNode,
        lo: Key | None,
        hi: Key | None,
        level: int,
        reached: list[Offset],
    ) -> None:
        if node.level != level:
            self.__fail(f"node {node.offset} at level {node.level}, expected {level}")

        b, n = node.bn
        if n > node.max_keys:
            self.__fail(f"node {node.offset} holds {n} keys")
        _, vals = node.pairs()
        valid = set(int(s) for s in node.slots(b, n))
        for slot, value in enumerate(vals):
            if (slot in valid) != (value != NULL):
                self.__fail(f"node {node.offset} slot {slot} breaks the NULL boundary")

        pairs = node_logical_view(node)
        keys = [p.key for p in pairs]
        if any(a >= c for a, c in zip(keys, keys[1:])):
            self.__fail(f"node {node.offset} is not sorted")
        if keys and ((lo is not None and keys[0] < lo) or (hi is not None and keys[-1] >= hi)):
            self.__fail(f"node {node.offset} keys leave [{lo}, {hi})")
        if node.fence_key != (0 if lo is None else lo):
            self.__fail(f"node {node.offset} has fence {node.fence_key}, its parent says {lo}")

        if node.is_leaf:
            reached.append(node.offset)
            return

        bounds = [lo, *keys, hi]
        for i, child in enumerate(self.children(node)):
            self.__verify_subtree(self.node(child), bounds[i], bounds[i + 1], level - 1, reached)

    @staticmethod
    def __fail(reason: str) -> None:
        logging.error("Unsound tree: %s !", reason)
        raise CorruptionError(reason)
