from __future__ import annotations

import random

import pytest

from src.circ import CircTree, OutcomeKind
from src.circ.errors import ContractError, CorruptionError, DuplicateKeyError, NotPowerOfTwoError
from src.pmem import PmArena


def _fill(tree: CircTree, keys: list[int]) -> None:
    for k in keys:
        tree.insert(k, k + 1)


def test_create_needs_power_of_two_capacity(arena: PmArena):
    with pytest.raises(NotPowerOfTwoError):
        CircTree.create(arena, 12)

def test_create_needs_at_least_eight_slots(arena: PmArena):
    with pytest.raises(NotPowerOfTwoError):
        CircTree.create(arena, 4)

def test_empty_tree(small_tree: CircTree):
    assert small_tree.search(1) is None
    assert small_tree.lookup(1).kind is OutcomeKind.NOT_FOUND
    assert small_tree.delete(1).kind is OutcomeKind.NOT_FOUND
    assert small_tree.scan(0, 100) == []
    assert len(small_tree) == 0
    small_tree.verify()

def test_ninth_key_splits_the_root_leaf(small_tree: CircTree):
    _fill(small_tree, [10, 20, 30, 40, 50, 60, 70, 80])
    assert small_tree.height == 1

    outcome = small_tree.insert(90, 91)
    assert outcome.kind is OutcomeKind.SPLIT_PERFORMED
    assert small_tree.splits == 1
    assert small_tree.height == 2
    assert [len(leaf_pairs) for leaf_pairs in (
        small_tree.scan(0, 49), small_tree.scan(50, 100),
    )] == [4, 5]
    small_tree.verify()

def test_split_with_new_key_on_the_left(small_tree: CircTree):
    _fill(small_tree, [10, 20, 30, 40, 50, 60, 70, 80])
    small_tree.insert(15, 16)
    assert [p.key for p in small_tree.items()] == [10, 15, 20, 30, 40, 50, 60, 70, 80]
    small_tree.verify()

def test_insert_errors(small_tree: CircTree):
    small_tree.insert(5, 6)
    with pytest.raises(DuplicateKeyError):
        small_tree.insert(5, 7)
    with pytest.raises(ContractError):
        small_tree.insert(6, 0)

def test_random_inserts_stay_sorted_and_sound(small_tree: CircTree):
    keys = random.Random(1).sample(range(1, 100_000), 800)
    _fill(small_tree, keys)

    small_tree.verify()
    assert [p.key for p in small_tree.items()] == sorted(keys)
    assert len(small_tree) == len(keys)
    assert small_tree.height >= 3
    for k in keys[::17]:
        assert small_tree.search(k) == k + 1
    assert small_tree.search(100_001) is None

def test_descending_and_ascending_loads(arena: PmArena):
    tree = CircTree.create(arena, 16)
    _fill(tree, list(range(1000, 0, -1)))
    _fill(tree, list(range(2000, 3000)))
    tree.verify()
    assert len(tree) == 2000

def test_deletes_merge_underutilized_leaves(small_tree: CircTree):
    rng = random.Random(3)
    keys = rng.sample(range(1, 10_000), 300)
    _fill(small_tree, keys)

    victims = rng.sample(keys, 250)
    outcomes = [small_tree.delete(k).kind for k in victims]

    assert OutcomeKind.MERGE_PERFORMED in outcomes
    assert small_tree.merges == outcomes.count(OutcomeKind.MERGE_PERFORMED)
    small_tree.verify()
    left = sorted(set(keys) - set(victims))
    assert [p.key for p in small_tree.items()] == left
    for k in victims[:20]:
        assert small_tree.search(k) is None

def test_merge_lowers_the_fence_of_the_absorbing_leaf(small_tree: CircTree):
    _fill(small_tree, range(10, 140, 10))
    assert [leaf.fence_key for leaf in small_tree.level_chain(0)] == [0, 50, 90]

    assert small_tree.delete(50).kind is OutcomeKind.MERGE_PERFORMED
    assert [leaf.fence_key for leaf in small_tree.level_chain(0)] == [0, 50]
    assert small_tree.descend(60)[-1].fence_key == 50
    small_tree.verify()

def test_mixed_ops_match_dict_oracle(small_tree: CircTree):
    rng = random.Random(11)
    oracle: dict[int, int] = {}
    for _ in range(3000):
        k = rng.randrange(1, 400)
        roll = rng.random()
        if roll < 0.5:
            if k in oracle:
                with pytest.raises(DuplicateKeyError):
                    small_tree.insert(k, k + 1)
            else:
                small_tree.insert(k, k + 1)
                oracle[k] = k + 1
        elif roll < 0.8:
            kind = small_tree.delete(k).kind
            assert (kind is not OutcomeKind.NOT_FOUND) == (k in oracle)
            oracle.pop(k, None)
        else:
            assert small_tree.search(k) == oracle.get(k)

    small_tree.verify()
    assert dict(small_tree.items()) == oracle

def test_update(small_tree: CircTree):
    _fill(small_tree, range(1, 40))
    outcome = small_tree.update(17, 1017)
    assert outcome.kind is OutcomeKind.UPDATED
    assert outcome.value == 18
    assert small_tree.search(17) == 1017
    assert small_tree.update(99, 1).kind is OutcomeKind.NOT_FOUND

def test_scan(small_tree: CircTree):
    _fill(small_tree, range(10, 500, 10))
    assert [p.key for p in small_tree.scan(95, 160)] == [100, 110, 120, 130, 140, 150, 160]
    assert small_tree.scan(1, 5) == []
    assert [p.key for p in small_tree.scan(490, 10_000)] == [490]
    with pytest.raises(ContractError):
        small_tree.scan(10, 5)

def test_linear_search_variant(arena: PmArena):
    tree = CircTree.create(arena, 8, linear_search=True)
    keys = random.Random(5).sample(range(1, 5000), 200)
    _fill(tree, keys)
    tree.verify()
    assert all(tree.search(k) == k + 1 for k in keys)

def test_clean_reopen_runs_no_recovery(arena: PmArena):
    tree = CircTree.create(arena, 8)
    _fill(tree, range(1, 30))
    tree.close()

    reopened = CircTree.open(arena)
    assert reopened.last_recovery is None
    assert [p.key for p in reopened.items()] == list(range(1, 30))
    reopened.close()
    assert CircTree.open(arena).last_recovery is None

def test_context_manager_closes(arena: PmArena):
    with CircTree.create(arena, 8) as tree:
        tree.insert(1, 2)
    assert not tree.superblock.start_flag

def test_open_without_tree(arena: PmArena):
    with pytest.raises(CorruptionError):
        CircTree.open(arena)
