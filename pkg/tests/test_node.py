from __future__ import annotations

import random

import numpy as np
import pytest

from src.circ import (
    CircNode,
    circ_index,
    node_delete,
    node_insert,
    node_logical_view,
    node_search,
    node_search_linear,
    node_update,
)
from src.circ._consts import HEADER_BYTES, NULL, PAIR_SIZE
from src.circ.errors import (
    ContractError,
    DuplicateKeyError,
    KeyNotFoundError,
    NodeFullError,
    NotPowerOfTwoError,
)
from src.pmem import PmArena


def _node(arena: PmArena, capacity: int, keys: list[int], base: int = 0) -> CircNode:
    """A leaf holding keys from slot base on, values key + 1."""
    node = CircNode.create(arena, capacity, 0)
    node.format(0, NULL, 0)
    for i, k in enumerate(keys):
        node.write_pair((base + i) % capacity, k, k + 1)
        node.persist_slot((base + i) % capacity)
    node.set_bn(base, len(keys))
    return node

def _keys(node: CircNode) -> list[int]:
    return [p.key for p in node_logical_view(node)]


@pytest.mark.parametrize("capacity", [32, 64, 128, 256])
def test_circ_index_is_modulo(capacity: int):
    b, i = np.meshgrid(np.arange(1024), np.arange(1024))
    assert np.array_equal(circ_index(b, i, capacity), (b + i) % capacity)

def test_circ_index_worked_example():
    assert circ_index(133, 165, 256) == 42

def test_circ_index_wraps_backward():
    assert circ_index(0, -1, 8) == 7

@pytest.mark.parametrize("capacity", [0, 1, 12, 100])
def test_circ_index_rejects_other_capacities(capacity: int):
    with pytest.raises(NotPowerOfTwoError):
        circ_index(0, 0, capacity)

def test_node_capacity_must_be_power_of_two(arena: PmArena):
    with pytest.raises(NotPowerOfTwoError):
        CircNode.create(arena, 24, 0)

def test_search_stays_in_one_contiguous_segment(arena: PmArena):
    capacity = 16
    for base in range(capacity):
        for n in range(1, capacity + 1):
            keys = list(range(10, 10 * (n + 1), 10))
            node = _node(arena, capacity, keys, base)
            for k in [*keys, 5, 15, 10 * n + 5]:
                found = node_search(node, k)
                start, stop = found.scanned
                assert start < stop <= capacity
                assert found.found == (k in keys)
                if found.found:
                    slot = circ_index(base, found.pos, capacity)
                    assert start <= slot < stop
                    assert found.value == k + 1
                else:
                    assert found.pos == sum(1 for key in keys if key < k)

def test_linear_search_agrees(arena: PmArena):
    keys = [3, 9, 27, 81, 243]
    node = _node(arena, 8, keys, base=6)
    for k in range(300):
        assert node_search_linear(node, k).found == node_search(node, k).found
        assert node_search_linear(node, k).pos == node_search(node, k).pos

def test_insert_small_key_shifts_left(arena: PmArena):
    node = _node(arena, 8, [10, 20, 30, 40, 50, 60, 70])
    assert node_insert(arena, node, 15, 16) == 1
    assert node.bn == (7, 8)
    assert _keys(node) == [10, 15, 20, 30, 40, 50, 60, 70]

def test_insert_great_key_shifts_right(arena: PmArena):
    node = _node(arena, 8, [10, 20, 30, 40, 50, 60, 70])
    assert node_insert(arena, node, 65, 66) == 1
    assert node.bn == (0, 8)
    assert _keys(node) == [10, 20, 30, 40, 50, 60, 65, 70]

def test_descending_inserts_never_shift(arena: PmArena):
    node = _node(arena, 256, [])
    shifts = sum(node_insert(arena, node, k, k + 1) for k in range(256, 0, -1))
    assert shifts == 0
    assert _keys(node) == list(range(1, 257))

def test_insert_errors(arena: PmArena):
    node = _node(arena, 8, [10, 20, 30, 40, 50, 60, 70, 80])
    with pytest.raises(NodeFullError):
        node_insert(arena, node, 15, 16)

    node = _node(arena, 8, [10, 20])
    with pytest.raises(DuplicateKeyError):
        node_insert(arena, node, 20, 99)
    with pytest.raises(ContractError):
        node_insert(arena, node, 30, NULL)

@pytest.mark.parametrize(("victim", "shifts", "bn"), [
    (10, 0, (1, 6)),
    (70, 0, (0, 6)),
    (50, 2, (0, 6)),
    (20, 1, (1, 6)),
])
def test_delete_moves_the_smaller_side(arena: PmArena, victim: int, shifts: int, bn: tuple[int, int]):
    keys = [10, 20, 30, 40, 50, 60, 70]
    node = _node(arena, 8, keys)
    assert node_delete(arena, node, victim) == shifts
    assert node.bn == bn
    assert _keys(node) == [k for k in keys if k != victim]

def test_delete_nulls_the_vacated_slot(arena: PmArena):
    node = _node(arena, 8, [10, 20, 30, 40, 50, 60, 70])
    node_delete(arena, node, 20)
    _, vals = node.pairs()
    assert vals[0] == NULL

def test_delete_missing_key(arena: PmArena):
    node = _node(arena, 8, [10, 20])
    with pytest.raises(KeyNotFoundError):
        node_delete(arena, node, 15)

def test_update_swings_value(arena: PmArena):
    node = _node(arena, 8, [10, 20, 30], base=6)
    assert node_update(node, 30, 99) == 31
    assert node_search(node, 30).value == 99

def test_random_ops_match_sorted_oracle(arena: PmArena):
    rng = random.Random(7)
    node = _node(arena, 16, [])
    oracle: list[int] = []

    for _ in range(2000):
        n = len(oracle)
        if n < 16 and (not oracle or rng.random() < 0.55):
            k = rng.randrange(1, 500)
            if k in oracle:
                continue
            shifts = node_insert(arena, node, k, k + 1)
            oracle.append(k)
            oracle.sort()
        else:
            k = rng.choice(oracle)
            shifts = node_delete(arena, node, k)
            oracle.remove(k)

        assert shifts <= n // 2
        assert _keys(node) == oracle
        b, count = node.bn
        _, vals = node.pairs()
        valid = {circ_index(b, i, 16) for i in range(count)}
        assert all((vals[s] != NULL) == (s in valid) for s in range(16))

def test_deleting_the_smallest_key_flushes_one_data_line(pair_lines: PmArena):
    node = _node(pair_lines, 8, [8, 15, 22, 31, 45, 57])
    before = pair_lines.stats().flushes_by_tag.get("data", 0)
    assert node_delete(pair_lines, node, 8) == 0
    assert pair_lines.stats().flushes_by_tag["data"] - before == 1
    assert node.bn == (1, 5)

def test_header_is_four_words_and_info_precedes_the_array(arena: PmArena):
    node = CircNode.create(arena, 8, 2)
    node.format(0, NULL, 17, leftmost=123)
    assert HEADER_BYTES == 32
    assert node.header.size == HEADER_BYTES
    assert arena.read_word(node.header, 0) == node.array.offset
    assert node.array.offset % arena.line_size == 0
    assert node.info.offset + arena.line_size == node.array.offset
    assert (node.level, node.fence_key, node.leftmost) == (2, 17, 123)

def test_search_scans_the_segment_in_order(arena: PmArena):
    node = _node(arena, 8, [30, 10, 20, 40])
    # The first key not smaller than k ends the scan, so 20 is never reached
    found = node_search(node, 20)
    assert not found.found
    assert found.pos == 0

def test_random_wrapped_nodes_search_one_segment():
    arena = PmArena(capacity=1 << 16, track_stores=False, log_events=False)
    rng = random.Random(11)
    nodes = {capacity: _node(arena, capacity, []) for capacity in (8, 16, 32, 64)}

    for _ in range(10_000):
        capacity = rng.choice(list(nodes))
        node = nodes[capacity]
        n = rng.randrange(2, capacity + 1)
        b = rng.randrange(capacity - n + 1, capacity)
        keys = sorted(rng.sample(range(1, 1000), n))
        arena.store_sequence(node.array, [
            (circ_index(b, i, capacity) * PAIR_SIZE + half * 8, k + half)
            for i, k in enumerate(keys) for half in (0, 1)
        ])

        k = rng.randrange(0, 1001)
        found = node_search(node, k, view=(b, n))
        start, stop = found.scanned
        assert (start, stop) in ((b, capacity), (0, b + n - capacity))
        assert found.pos == sum(1 for key in keys if key < k)
        assert found.found == (k in keys)

def test_insert_persists_pairs_before_the_header(pair_lines: PmArena):
    node = _node(pair_lines, 8, [10, 20, 30, 40, 50])
    start = pair_lines.event_count
    assert node_insert(pair_lines, node, 45, 46) == 1

    events = [e for e in pair_lines.events if e.index >= start]
    assert [e.kind for e in events] == [
        "store", "store", "store", "store", "flush", "fence", "atomic", "flush", "fence",
    ]
    words = [e.word - node.array.offset // 8 for e in events[:4]]
    assert words == [10, 11, 8, 9]
    assert [e.tag for e in events if e.kind == "flush"] == ["data", "header"]

def test_insert_into_a_node_with_a_nulled_tail_shifts_one_pair(arena: PmArena):
    node = _node(arena, 8, [15, 31, 45, 57])
    arena.write_word(node.array, 7 * PAIR_SIZE, 8)
    arena.flush_line(node.array, 7 * PAIR_SIZE)

    assert node_insert(arena, node, 22, 23) == 1
    assert node.bn == (7, 5)
    keys, _ = node.pairs()
    assert (int(keys[7]), int(keys[0])) == (15, 22)
    assert _keys(node) == [15, 22, 31, 45, 57]
