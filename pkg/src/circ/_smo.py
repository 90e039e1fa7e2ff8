"""Structure modifications: splits, merges and parent updates.

Every numbered step persists (flush and fence) before the next one
begins, so a crash leaves the tree in a state recovery knows.

Splits run under node locks only. The split node stays locked while
its parent is locked and updated, parents are found again from the
root and reached by moving right, so locks are always taken bottom-up
and left to right.

Functions:
    clear_slots(node: CircNode, slots: Sequence[int]) -> None
    leaf_split(tree: CircTree, leaf: CircNode, k: Key, v: Value) -> None
    internal_split(tree: CircTree, node: CircNode) -> tuple[Key, CircNode]
    insert_into_parent(tree: CircTree, left: CircNode, key: Key, right: CircNode) -> None
    grow_root(tree: CircTree, left: CircNode, key: Key, right: CircNode) -> CircNode
    leaf_merge(tree: CircTree, path: list[CircNode], left: CircNode,
               right: CircNode, pred: CircNode | None) -> None
    remove_child(tree: CircTree, parent: CircNode, child: Offset) -> None
"""

from __future__ import annotations

import bisect
import logging
from typing import TYPE_CHECKING

from ._consts import NULL, PAIR_SIZE
from .errors import ContractError
from .node import node_delete, node_insert, node_logical_view

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy as np

    from src.hinting import Key, Offset, Value

    from .node import CircNode
    from .tree import CircTree


def _fill(node: CircNode, pairs: Sequence[tuple[Key, Value]], first: int = 0) -> None:
    """Writes pairs from slot first onward, persisting line by line."""
    pending: list[tuple[int, int]] = []
    last = len(pairs) - 1
    for i, (k, v) in enumerate(pairs):
        slot = (first + i) & node.mask
        pending.extend(((slot * PAIR_SIZE, k), (slot * PAIR_SIZE + 8, v)))
        if i == last or node.starts_line((slot + 1) & node.mask):
            node.store(pending)
            pending = []
            node.persist_slot(slot)

def clear_slots(node: CircNode, slots: Sequence[int]) -> None:
    """NULLs the slots in order, persisting line by line."""
    def line(slot: int) -> int:
        return node.arena.line_of(node.array, slot * PAIR_SIZE)

    pending: list[tuple[int, int]] = []
    for i, slot in enumerate(slots):
        pending.extend(((slot * PAIR_SIZE + 8, NULL), (slot * PAIR_SIZE, NULL)))
        if i + 1 == len(slots) or line(slots[i + 1]) != line(slot):
            node.store(pending)
            pending = []
            node.persist_slot(slot)

def _pairs_at(keys: np.ndarray, vals: np.ndarray, slots: Sequence[int]) -> list[tuple[Key, Value]]:
    return [(int(keys[s]), int(vals[s])) for s in slots]

def leaf_split(tree: CircTree, leaf: CircNode, k: Key, v: Value) -> None:
    """Splits a full leaf, locked by the caller, while inserting (k, v).

    Steps:
        1. The split point is the middle logical position.
        2. A zeroed leaf receives the greater half, plus the new pair
           when it belongs there, from slot 0.
        3. Its header gets base 0, its count and the old right sibling.
        4. The old leaf's sibling swings to the new leaf, then its
           greater half is NULLed.
        5. The new pair joins the old leaf if it belongs to the smaller
           half, and the old leaf's count commits, then the parent
           learns the separator.
    """
    b, n = leaf.bn
    if n != leaf.max_keys:
        logging.error("Leaf %d is not full !", leaf.offset)
        raise ContractError

    mid = leaf.capacity // 2
    keys, vals = leaf.pairs()
    slots = [int(s) for s in leaf.slots(b, n)]
    sep = int(keys[slots[mid]])
    goes_right = k > sep

    moved = _pairs_at(keys, vals, slots[mid:])
    if goes_right:
        bisect.insort(moved, (k, v))

    right = tree.new_node(0)
    _fill(right, moved)
    right.format(len(moved), leaf.sibling, sep)

    leaf.set_sibling(right.offset)
    clear_slots(leaf, slots[mid:])

    if goes_right:
        leaf.set_bn(b, mid)
    else:
        node_insert(tree.arena, leaf, k, v, view=(b, mid))

    logging.debug("Split leaf %d at key %d into %d", leaf.offset, sep, right.offset)
    tree.count_split()
    insert_into_parent(tree, leaf, sep, right)

def internal_split(tree: CircTree, node: CircNode) -> tuple[Key, CircNode]:
    """Splits a full internal node, locked by the caller.

    The middle key is promoted to the parent and its child becomes the
    leftmost child of the new node.

    Returns:
        tuple[Key, CircNode]: The promoted key and the new right node.
    """
    b, n = node.bn
    mid = n // 2
    keys, vals = node.pairs()
    slots = [int(s) for s in node.slots(b, n)]
    sep = int(keys[slots[mid]])

    right = tree.new_node(node.level)
    moved = _pairs_at(keys, vals, slots[mid + 1:])
    if moved:
        _fill(right, moved)
    right.format(len(moved), node.sibling, sep, leftmost=int(vals[slots[mid]]))

    node.set_sibling(right.offset)
    clear_slots(node, slots[mid:])
    node.set_bn(b, mid)

    logging.debug("Split level %d node %d at key %d", node.level, node.offset, sep)
    tree.count_split()
    insert_into_parent(tree, node, sep, right)
    return sep, right

def grow_root(tree: CircTree, left: CircNode, key: Key, right: CircNode) -> CircNode:
    """Puts a new root above left and right, then swings the root word."""
    root = tree.new_node(left.level + 1)
    _fill(root, [(key, right.offset)])
    root.format(1, NULL, left.fence_key, leftmost=left.offset)

    tree.superblock.root = root.offset
    tree.superblock.height = root.level + 1
    logging.info("Tree grew to height %d", root.level + 1)
    return root

def insert_into_parent(tree: CircTree, left: CircNode, key: Key, right: CircNode) -> None:
    """Links right, the new sibling of left, into the level above.

    A left node with nothing above it is the root, and a new root is
    grown. Another node of the top level waits for that root.

    Args:
        tree (CircTree): The tree.
        left (CircNode): The node that was split, locked by the caller.
        key (Key): Separator, the smallest key reachable in right.
        right (CircNode): The node to link.
    """
    level = left.level + 1
    with tree.root_growth:
        while tree.root.level < level:
            if tree.superblock.root == left.offset:
                grow_root(tree, left, key, right)
                tree.root_growth.notify_all()
                return
            tree.root_growth.wait()

    parent = tree.lock_covering(key, level)
    try:
        while parent.nkeys >= parent.max_keys:
            sep, new_right = internal_split(tree, parent)
            if key < sep:
                break
            target = tree.lock_covering(key, level, start=new_right)
            tree.locks.release(parent)
            parent = target
        node_insert(tree.arena, parent, key, right.offset)
    finally:
        tree.locks.release(parent)

def leaf_merge(
    tree: CircTree,
    path: list[CircNode],
    left: CircNode,
    right: CircNode,
    pred: CircNode | None,
) -> None:
    """Moves every pair of left into its right sibling, then unlinks left.

    Steps:
        1. Left's pairs go to the free slots before right's base.
        2. Right's (base, nkeys) commits them, and right's low fence
           drops to left's.
        3. Left's count drops to zero.
        4. Left leaves the leaf list, its own sibling word is kept.
        5. The parent drops right's separator and points at right where
           it pointed at left.

    Args:
        tree (CircTree): The tree.
        path (list[CircNode]): Root to left.
        left (CircNode): Underutilized leaf.
        right (CircNode): Its right sibling, under the same parent.
        pred (CircNode | None): Left's predecessor in the leaf list,
            None when left is the first leaf.

    Raises:
        ContractError: The pairs do not fit or the parents differ.
    """
    arena, parent = tree.arena, path[-2]
    bl, nl = left.bn
    br, nr = right.bn
    right_slot = parent.slot_of_value(right.offset)
    if nl + nr > right.capacity or right_slot is None:
        logging.error("Cannot merge leaf %d into %d !", left.offset, right.offset)
        raise ContractError

    pairs = node_logical_view(left)
    if pairs:
        _fill(right, pairs, first=(br - nl) & right.mask)
    right.set_bn(br - nl, nr + nl)
    right.set_fence(left.fence_key)
    left.set_bn(bl, 0)

    if pred is None:
        tree.superblock.leaf_head = right.offset
    else:
        pred.set_sibling(right.offset)

    keys, _ = parent.pairs()
    node_delete(arena, parent, int(keys[right_slot]))
    _point_to(parent, left.offset, right.offset)

    logging.debug("Merged leaf %d into %d", left.offset, right.offset)

def _point_to(parent: CircNode, old: Offset, new: Offset) -> None:
    if parent.leftmost == old:
        parent.set_leftmost(new)
        return
    slot = parent.slot_of_value(old)
    if slot is not None:
        parent.set_value(slot, new)

def remove_child(tree: CircTree, parent: CircNode, child: Offset) -> None:
    """Finishes unlinking a merged child from its parent.

    The child's sibling word still names the node that absorbed it.
    """
    replacement = tree.node(child).sibling
    slot = parent.slot_of_value(replacement)
    if slot is not None:
        keys, _ = parent.pairs()
        node_delete(tree.arena, parent, int(keys[slot]))
    _point_to(parent, child, replacement)
