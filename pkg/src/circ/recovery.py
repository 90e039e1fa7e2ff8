"""Crash recovery of a tree whose start flag was left set.

Levels are repaired bottom-up. Within a level, every node is first
checked against its right sibling for an interrupted split or merge,
then repaired locally by comparing its header count with the non-NULL
values it holds. Once a level is sound, the level above is repaired
and its child pointers are reconciled with the level's sibling list.

Repairs are labelled:
    1a  an interrupted shift of an insert, or an added pair whose key
        did not persist, undone
    1b  an insert whose pair is durable but not its header, committed
    2   an interrupted delete, rolled forward
    3a  a split or merge caught before its source node's count changed
    3b  a split or merge caught after it
    in_pointer  a parent pointer added or removed
    root_grow   a root created above a split root

Classes:
    Fix
    RecoveryReport

Functions:
    recover(tree: CircTree) -> RecoveryReport
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ._consts import NULL, PAIR_SIZE
from ._smo import clear_slots, grow_root, insert_into_parent, remove_child
from .errors import CorruptionError

if TYPE_CHECKING:
    import numpy as np

    from src.hinting import Key, Offset, Value

    from .node import CircNode
    from .tree import CircTree


@dataclass(frozen=True)
class Fix:
    case: str
    node: Offset


@dataclass
class RecoveryReport:
    fixes: list[Fix] = field(default_factory=list)

    @property
    def cases(self) -> set[str]:
        return {fix.case for fix in self.fixes}

    def add(self, case: str, node: CircNode) -> None:
        logging.info("Recovery %s on node %d", case, node.offset)
        self.fixes.append(Fix(case, node.offset))


def _corrupt(node: CircNode, reason: str) -> CorruptionError:
    logging.error("Node %d: %s !", node.offset, reason)
    return CorruptionError(f"node {node.offset}: {reason}")

# ---------------------------------------------------------------------- local

def _ring(node: CircNode, start: int, length: int) -> list[int]:
    return [(start + i) & node.mask for i in range(length)]

def _is_run(nonnull: np.ndarray, node: CircNode, start: int, length: int) -> bool:
    """Whether the non-NULL slots are exactly the ring range."""
    run = set(_ring(node, start, length))
    return all(bool(nonnull[s]) == (s in run) for s in range(node.capacity))

def _adjacent_dups(vals: np.ndarray, node: CircNode) -> list[int]:
    """Slots d such that d and d+1 hold the same non-NULL value."""
    return [
        d for d in range(node.capacity)
        if vals[d] != NULL and vals[d] == vals[(d + 1) & node.mask]
    ]

def _rewrite(
    node: CircNode,
    keys: np.ndarray,
    vals: np.ndarray,
    pairs: list[tuple[Key, Value]],
    base: int,
    cleared: int,
) -> None:
    """Places pairs from base on, NULLs one slot, persists touched lines."""
    touched = {cleared}
    for i, (k, v) in enumerate(pairs):
        slot = (base + i) & node.mask
        if int(keys[slot]) != k or int(vals[slot]) != v:
            node.write_pair(slot, k, v)
            touched.add(slot)
    node.clear_slot(cleared)

    lines: dict[int, int] = {}
    for slot in touched:
        lines.setdefault(node.arena.line_of(node.array, slot * PAIR_SIZE), slot)
    for slot in lines.values():
        node.arena.flush_line(node.array, slot * PAIR_SIZE, tag="data")
    node.arena.fence()

def _torn_position(run_keys: list[Key], extends_left: bool) -> int | None:  # noqa: FBT001
    """Position of an added pair whose value persisted but not its key.

    A torn pair in the middle repeats the key of the pair it was copied
    from, one at an end keeps a stale key that breaks the order.
    """
    for i in range(len(run_keys) - 1):
        if run_keys[i] < run_keys[i + 1]:
            continue
        if run_keys[i] == run_keys[i + 1]:
            return i + 1 if extends_left else i
        if extends_left and i == 0:
            return 0
        if not extends_left and i == len(run_keys) - 2:
            return len(run_keys) - 1
        return None
    return None

def _repair_local(  # noqa: C901, PLR0912
    node: CircNode,
    view: tuple[int, int],
    report: RecoveryReport,
) -> tuple[int, int]:
    """Repairs the slots of one node and returns its consistent header."""
    b, n = view
    mask = node.mask
    keys, vals = node.pairs()
    nonnull = vals != NULL
    c = int(nonnull.sum())
    dups = _adjacent_dups(vals, node)
    if len(dups) > 1:
        raise _corrupt(node, "several duplicated values")

    if c == n and not dups:
        if not _is_run(nonnull, node, b, n):
            raise _corrupt(node, "valid pairs outside the header range")
        return b, n

    if c == n + 1:
        if n + 1 < node.capacity:
            extends_left = bool(nonnull[(b - 1) & mask]) and _is_run(nonnull, node, b - 1, n + 1)
            if not extends_left and not _is_run(nonnull, node, b, n + 1):
                raise _corrupt(node, "non-contiguous pairs")
        elif dups:
            extends_left = ((dups[0] - b + 1) & mask) <= n // 2
        else:
            extends_left = int(keys[(b - 1) & mask]) < int(keys[b])

        start = (b - 1) & mask if extends_left else b
        ring = _ring(node, start, n + 1)
        if dups:
            d = dups[0]
            drop = (d + 1) & mask if extends_left else d
        else:
            ring_keys = [int(keys[s]) for s in ring]
            if all(x < y for x, y in zip(ring_keys, ring_keys[1:])):
                report.add("1b", node)
                return start, n + 1
            torn = _torn_position(ring_keys, extends_left)
            if torn is None:
                raise _corrupt(node, "unsorted pairs")
            drop = ring[torn]

        run = [s for s in ring if s != drop]
        pairs = [(int(keys[s]), int(vals[s])) for s in run]
        cleared = (b - 1) & mask if extends_left else (b + n) & mask
        _rewrite(node, keys, vals, pairs, b, cleared)
        report.add("1a", node)
        return b, n

    if c == n and len(dups) == 1:
        if not _is_run(nonnull, node, b, n):
            raise _corrupt(node, "non-contiguous pairs")
        d = dups[0]
        pulls_left = ((d - b) & mask) >= n // 2
        drop = d if pulls_left else (d + 1) & mask
        run = [s for s in _ring(node, b, n) if s != drop]
        pairs = [(int(keys[s]), int(vals[s])) for s in run]
        if pulls_left:
            _rewrite(node, keys, vals, pairs, b, (b + n - 1) & mask)
            new = (b, n - 1)
        else:
            _rewrite(node, keys, vals, pairs, b + 1, b)
            new = ((b + 1) & mask, n - 1)
        report.add("2", node)
        return new

    if c == n - 1 and not dups:
        if not nonnull[b] and _is_run(nonnull, node, b + 1, n - 1):
            report.add("2", node)
            return (b + 1) & mask, n - 1
        if _is_run(nonnull, node, b, n - 1):
            report.add("2", node)
            return b, n - 1
        raise _corrupt(node, "hole inside the valid range")

    if c <= n - 2 and n == node.max_keys:
        mid = node.capacity // 2 if node.is_leaf else (node.capacity - 1) // 2
        report.add("3b", node)
        return _repair_local(node, (b, mid), report)

    raise _corrupt(node, f"{c} values for a count of {n}")

# ---------------------------------------------------------------------- cross

def _detach(tree: CircTree, prev: CircNode | None, node: CircNode, right: CircNode) -> None:
    if right.fence_key > node.fence_key:
        right.set_fence(node.fence_key)
    if prev is None:
        tree.superblock.leaf_head = right.offset
    else:
        prev.set_sibling(right.offset)
    logging.debug("Detached merged leaf %d", node.offset)

def _cross_check(
    tree: CircTree,
    prev: CircNode | None,
    left: CircNode,
    right: CircNode,
    report: RecoveryReport,
) -> bool:
    """Finishes or undoes a split or merge between two siblings.

    Returns:
        bool: Whether left was unlinked from its level.
    """
    raw_left, raw_right = left.raw_values(), right.raw_values()
    valid_right = right.valid_values()
    if not right.is_leaf:
        valid_right.add(right.leftmost)
    shared = raw_left & raw_right
    bl, nl = left.bn

    if shared and not valid_right & raw_left:
        b, n = right.bn
        valid = {int(s) for s in right.slots(b, n)}
        _, vals = right.pairs()
        clear_slots(right, [s for s in range(right.capacity) if s not in valid and vals[s] != NULL])
        report.add("3a", right)
        return False

    if left.is_leaf:
        valid_left = left.valid_values()
        if nl > 0 and valid_left and valid_left <= valid_right:
            left.set_bn(bl, 0)
            _detach(tree, prev, left, right)
            report.add("3a", left)
            return True
        if nl == 0 and raw_left and raw_left <= raw_right:
            _detach(tree, prev, left, right)
            report.add("3b", left)
            return True

    if shared:
        if nl != left.max_keys:
            raise _corrupt(left, "sibling duplicates without a full source")
        _, vals = left.pairs()
        present = int((vals != NULL).sum())
        clear_slots(left, [s for s in range(left.capacity) if int(vals[s]) in valid_right])
        mid = left.capacity // 2 if left.is_leaf else (left.capacity - 1) // 2
        left.set_bn(bl, mid)
        report.add("3a" if present == nl else "3b", left)

    return False

def _repair_level(tree: CircTree, level: int, report: RecoveryReport) -> None:
    chain = tree.level_chain(level)
    prev: CircNode | None = None
    node: CircNode | None = chain[0] if chain else None

    while node is not None:
        right = tree.node(node.sibling) if node.sibling != NULL else None
        if right is not None and _cross_check(tree, prev, node, right, report):
            node = right
            continue

        header = node.bn
        fixed = _repair_local(node, header, report)
        if fixed != header:
            node.set_bn(*fixed)

        prev, node = node, right

# ---------------------------------------------------------------- pointers

def _reconcile(tree: CircTree, level: int, report: RecoveryReport) -> None:
    """Makes the pointers of level+1 match the sibling list of level."""
    members = {node.offset for node in tree.level_chain(level)}

    for parent in tree.level_chain(level + 1):
        for child in tree.children(parent):
            if child != NULL and child not in members:
                remove_child(tree, parent, child)
                report.add("in_pointer", parent)

    chain = tree.level_chain(level)
    referenced = {c for parent in tree.level_chain(level + 1) for c in tree.children(parent)}
    for i, node in enumerate(chain):
        if node.offset in referenced:
            continue
        if i == 0:
            raise _corrupt(node, "first node of its level has no parent")
        key = node.fence_key
        insert_into_parent(tree, chain[i - 1], key, node)
        report.add("in_pointer", node)

# -------------------------------------------------------------------- entry

def recover(tree: CircTree) -> RecoveryReport:
    """Brings a crashed tree back to a sound state.

    Lock words are zeroed and the start flag is cleared last.

    Args:
        tree (CircTree): A tree opened on a crash image.

    Raises:
        CorruptionError: The image is not one a crash can produce.

    Returns:
        RecoveryReport: The applied repairs, empty for a clean image.
    """
    report = RecoveryReport()
    _repair_level(tree, 0, report)

    level = 0
    while True:
        if level >= tree.root.level:
            chain = tree.level_chain(level)
            if len(chain) > 2:  # noqa: PLR2004
                raise _corrupt(chain[0], "more than two roots")
            if len(chain) == 1:
                break
            grow_root(tree, chain[0], chain[1].fence_key, chain[1])
            report.add("root_grow", chain[0])
        _repair_level(tree, level + 1, report)
        _reconcile(tree, level, report)
        level += 1

    if tree.superblock.height != tree.root.level + 1:
        tree.superblock.height = tree.root.level + 1

    for lvl in range(tree.root.level + 1):
        for node in tree.level_chain(lvl):
            if node.lock_word:
                node.mark_locked(False)

    tree.superblock.start_flag = False
    logging.info("Recovery done with %d fixes", len(report.fixes))
    return report
