from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from src.circ import CircTree, recover
from src.circ.errors import CorruptionError
from src.circ._consts import PAIR_SIZE
from src.pmem import CrashModel, CrashPolicy, PmArena
from src.pmem.errors import SimulatedCrash

if TYPE_CHECKING:
    from collections.abc import Callable

    from src.pmem import CrashImage


def _tree(keys: list[int], model: CrashModel = CrashModel.LINE) -> CircTree:
    tree = CircTree.create(PmArena(capacity=1 << 16), 8, crash_model=model)
    for k in keys:
        tree.insert(k, k + 1)
    return tree

def _crash_images(tree: CircTree, op: Callable[[CircTree], object]) -> list[CrashImage]:
    """Dropped and persisted images at every event of op."""
    arena = tree.arena
    snap = arena.snapshot()
    first = arena.event_count
    op(tree)
    last = arena.event_count

    images = []
    for event in range(first, last):
        arena.restore(snap)
        arena.arm_crash(event)
        with pytest.raises(SimulatedCrash):
            op(CircTree(arena, tree.superblock))
        images.append(arena.crash(CrashPolicy.ALL_DROPPED))
        images.append(arena.crash(CrashPolicy.ALL_PERSISTED))
    return images

def _word_images(tree: CircTree, op: Callable[[CircTree], object]) -> list[CrashImage]:
    """Every word-subset image at every event of op."""
    arena = tree.arena
    snap = arena.snapshot()
    first = arena.event_count
    op(tree)
    last = arena.event_count

    images = []
    for event in range(first, last):
        arena.restore(snap)
        arena.arm_crash(event)
        with pytest.raises(SimulatedCrash):
            op(CircTree(arena, tree.superblock, crash_model=tree.crash_model))
        images.extend(arena.iter_crashes(CrashModel.WORD))
    return images

def _reopen(image: CrashImage) -> CircTree:
    tree = CircTree.open(PmArena.from_image(image))
    tree.verify()
    return tree


@pytest.mark.parametrize(("keys", "op"), [
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(35, 36)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(75, 76)),
    ([10, 20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(45, 46)),
    ([10, 20, 30, 40, 50, 60, 70, 80, 90], lambda t: t.delete(20)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.delete(40)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.delete(60)),
], ids=["insert_left", "insert_right", "split", "merge", "delete_push", "delete_pull"])
def test_every_crash_point_recovers_before_or_after(keys: list[int], op: Callable[[CircTree], object]):
    tree = _tree(keys)
    before = dict(tree.items())
    done = _tree(keys)
    op(done)
    after = dict(done.items())

    for image in _crash_images(tree, op):
        assert dict(_reopen(image).items()) in (before, after)

def test_recovery_is_idempotent():
    tree = _tree([10, 20, 30, 40, 50, 60, 70, 80])
    for image in _crash_images(tree, lambda t: t.insert(90, 91)):
        once = _reopen(image)
        contents = dict(once.items())
        again = recover(once)
        assert not again.fixes
        assert dict(once.items()) == contents
        once.verify()

def test_split_crashes_report_split_cases():
    tree = _tree([10, 20, 30, 40, 50, 60, 70, 80])
    cases: set[str] = set()
    for image in _crash_images(tree, lambda t: t.insert(90, 91)):
        report = _reopen(image).last_recovery
        assert report is not None
        cases |= report.cases
    assert {"3a", "root_grow"} <= cases

def test_clean_image_needs_no_fix():
    tree = _tree([5, 6, 7])
    image = tree.arena.crash(CrashPolicy.ALL_DROPPED)
    reopened = CircTree.open(PmArena.from_image(image))
    assert reopened.last_recovery is not None
    assert reopened.last_recovery.fixes == []
    assert [p.key for p in reopened.items()] == [5, 6, 7]

def test_recovery_clears_lock_words():
    tree = _tree([5, 6, 7])
    tree.root.mark_locked(True)
    reopened = CircTree.open(PmArena.from_image(tree.arena.crash(CrashPolicy.ALL_DROPPED)))
    assert reopened.root.lock_word == 0

def test_recovery_clears_and_sets_start_flag():
    tree = _tree([5])
    reopened = CircTree.open(PmArena.from_image(tree.arena.crash(CrashPolicy.ALL_DROPPED)))
    # Open marks the tree in use again until close
    assert reopened.superblock.start_flag
    reopened.close()
    assert CircTree.open(reopened.arena).last_recovery is None

def test_impossible_image_is_corruption():
    tree = _tree([10, 20, 30, 40, 50, 60])
    tree.root.set_bn(0, 3)
    with pytest.raises(CorruptionError):
        CircTree.open(PmArena.from_image(tree.arena.crash(CrashPolicy.ALL_DROPPED)))

_OPS = [
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(35, 36)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(75, 76)),
    ([10, 20, 30, 40, 50, 60, 70, 80], lambda t: t.insert(45, 46)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.delete(40)),
    ([20, 30, 40, 50, 60, 70, 80], lambda t: t.delete(60)),
]

@pytest.mark.parametrize(("keys", "op"), _OPS, ids=["insert_left", "insert_right", "split", "delete_push", "delete_pull"])
def test_word_ordered_tree_survives_every_word_subset(keys: list[int], op: Callable[[CircTree], object]):
    tree = _tree(keys, CrashModel.WORD)
    before = dict(tree.items())
    done = _tree(keys)
    op(done)
    after = dict(done.items())

    images = _word_images(tree, op)
    assert images
    for image in images:
        assert dict(_reopen(image).items()) in (before, after)

def test_word_ordered_tree_flushes_every_store():
    line = _tree([20, 30, 40])
    word = _tree([20, 30, 40], CrashModel.WORD)
    start = line.arena.stats().flush_count, word.arena.stats().flush_count
    line.insert(10, 11)
    word.insert(10, 11)
    assert word.arena.stats().flush_count - start[1] > line.arena.stats().flush_count - start[0]

def test_appended_pair_torn_apart_is_undone():
    tree = _tree([20, 30, 40])
    before = dict(tree.items())
    cases: set[str] = set()
    for image in _word_images(tree, lambda t: t.insert(50, 51)):
        reopened = _reopen(image)
        assert dict(reopened.items()) in (before, {**before, 50: 51})
        assert reopened.last_recovery is not None
        cases |= reopened.last_recovery.cases
    assert "1a" in cases

def test_value_without_key_is_not_committed():
    tree = _tree([20, 30, 40])
    leaf = tree.root
    b, n = leaf.bn
    slot = (b + n) & leaf.mask
    tree.arena.write_word(leaf.array, slot * PAIR_SIZE + 8, 51)
    tree.arena.flush_line(leaf.array, slot * PAIR_SIZE)
    tree.arena.fence()

    reopened = _reopen(tree.arena.crash(CrashPolicy.ALL_DROPPED))
    assert reopened.last_recovery is not None
    assert reopened.last_recovery.cases == {"1a"}
    assert [p.key for p in reopened.items()] == [20, 30, 40]

def test_durable_pair_without_header_is_committed():
    tree = _tree([20, 30, 40])
    leaf = tree.root
    b, n = leaf.bn
    slot = (b + n) & leaf.mask
    tree.arena.write_word(leaf.array, slot * PAIR_SIZE, 50)
    tree.arena.write_word(leaf.array, slot * PAIR_SIZE + 8, 51)
    tree.arena.flush_line(leaf.array, slot * PAIR_SIZE)
    tree.arena.fence()

    reopened = _reopen(tree.arena.crash(CrashPolicy.ALL_DROPPED))
    assert reopened.last_recovery is not None
    assert reopened.last_recovery.cases == {"1b"}
    assert [p.key for p in reopened.items()] == [20, 30, 40, 50]
