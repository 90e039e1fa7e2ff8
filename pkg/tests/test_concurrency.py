from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor

import pytest

from src.baselines import BaselineKind, BaselineTree
from src.bench import WorkloadSpec, run
from src.circ import CircTree, OutcomeKind
from src.pmem import PmArena

THREADS = 4


def _disjoint_keys(seed: int, per_thread: int) -> list[list[int]]:
    keys = random.Random(seed).sample(range(1, 1_000_000), THREADS * per_thread)
    return [keys[i::THREADS] for i in range(THREADS)]

def _insert_all(tree: CircTree | BaselineTree, parts: list[list[int]]) -> None:
    def job(part: list[int]) -> None:
        for k in part:
            tree.insert(k, k + 1)

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        list(pool.map(job, parts))


@pytest.mark.parametrize("capacity", [8, 32])
def test_parallel_inserts_into_circ_tree(capacity: int):
    tree = CircTree.create(PmArena(capacity=1 << 22), capacity)
    parts = _disjoint_keys(capacity, 500)
    _insert_all(tree, parts)

    tree.verify()
    everything = sorted(k for part in parts for k in part)
    assert [p.key for p in tree.items()] == everything
    assert all(tree.search(k) == k + 1 for k in everything[::37])

def test_lock_moves_right_past_a_split_seen_late(small_tree: CircTree):
    for k in range(10, 90, 10):
        small_tree.insert(k, k + 1)
    stale = small_tree.descend(70)[-1]
    small_tree.insert(90, 91)

    leaf = small_tree.lock_covering(70, start=stale)
    try:
        assert leaf.offset != stale.offset
        assert leaf.fence_key == 50
        assert leaf.lock_word == 1
        assert stale.lock_word == 0
    finally:
        small_tree.locks.release(leaf)
    assert leaf.lock_word == 0

def test_split_runs_while_a_reader_holds_the_latch(small_tree: CircTree):
    for k in range(10, 90, 10):
        small_tree.insert(k, k + 1)

    with ThreadPoolExecutor(max_workers=1) as pool, small_tree.latch.shared():
        outcome = pool.submit(small_tree.insert, 90, 91).result(timeout=10)
    assert outcome.kind is OutcomeKind.SPLIT_PERFORMED
    small_tree.verify()

def test_parallel_mixed_ops_on_circ_tree():
    tree = CircTree.create(PmArena(capacity=1 << 22), 16)
    parts = _disjoint_keys(3, 400)
    _insert_all(tree, parts)

    def job(part: list[int]) -> None:
        for k in part[::2]:
            tree.delete(k)
        for k in part[1::2]:
            tree.update(k, k + 2)

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        list(pool.map(job, parts))

    tree.verify()
    assert dict(tree.items()) == {k: k + 2 for part in parts for k in part[1::2]}

@pytest.mark.parametrize("kind", list(BaselineKind))
def test_parallel_inserts_into_baseline_tree(kind: BaselineKind):
    tree = BaselineTree(PmArena(capacity=1 << 22), 512, kind)
    parts = _disjoint_keys(7, 300)
    _insert_all(tree, parts)
    assert len(tree) == THREADS * 300

def test_threaded_run_reports_every_thread():
    report = run(WorkloadSpec(node_bytes=512, key_count=800, threads=THREADS))
    assert report.by_kind["insert"]["count"] == 800
    assert len(report.thread_geo_means_ns) == THREADS

@pytest.mark.slow
def test_four_writers_at_desk_scale():
    tree = CircTree.create(PmArena(capacity=1 << 24), 64)
    parts = _disjoint_keys(11, 10_000)
    _insert_all(tree, parts)
    tree.verify()
    assert len(tree) == THREADS * 10_000
