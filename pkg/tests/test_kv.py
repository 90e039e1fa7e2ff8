from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor

import pytest

from src.circ import CircTree, OutcomeKind
from src.circ.errors import ContractError, DuplicateKeyError
from src.kv import KvStore, parse_ycsb_key
from src.kv._consts import FIELD_COUNT, FIELD_SIZE
from src.pmem import CrashPolicy, PmArena
from src.pmem.errors import SimulatedCrash


def _fields(tag: int) -> list[bytes]:
    return [bytes([tag + i]) * FIELD_SIZE for i in range(FIELD_COUNT)]

@pytest.fixture
def store(arena: PmArena) -> KvStore:
    return KvStore(CircTree.create(arena, 8))


def test_put_then_get(store: KvStore):
    for k in range(1, 30):
        store.put(k, _fields(k))
    assert store.get(7) == b"".join(_fields(7))
    assert store.get(1000) is None

def test_update_field_touches_one_field(store: KvStore):
    store.put(5, _fields(0))
    outcome = store.update_field(5, 3, b"z" * FIELD_SIZE)
    assert outcome.kind is OutcomeKind.UPDATED

    value = store.get(5)
    assert value is not None
    fields = [value[i:i + FIELD_SIZE] for i in range(0, len(value), FIELD_SIZE)]
    expected = _fields(0)
    expected[3] = b"z" * FIELD_SIZE
    assert fields == expected

def test_update_of_missing_key_is_counted(store: KvStore):
    outcome = store.update_field(9, 0, bytes(FIELD_SIZE))
    assert outcome.kind is OutcomeKind.NOT_FOUND
    assert store.stats.misses == 1
    assert store.get(9) is None

def test_bad_records(store: KvStore):
    with pytest.raises(ContractError):
        store.put(1, _fields(0)[:9])
    with pytest.raises(ContractError):
        store.put(1, [b"x"] * FIELD_COUNT)
    store.put(1, _fields(0))
    with pytest.raises(ContractError):
        store.update_field(1, FIELD_COUNT, bytes(FIELD_SIZE))
    with pytest.raises(DuplicateKeyError):
        store.put(1, _fields(1))

def test_latencies_are_recorded(store: KvStore):
    store.put(1, _fields(0))
    store.get(1)
    store.update_field(1, 0, bytes(FIELD_SIZE))
    assert store.stats.counts == {"insert": 1, "search": 1, "update": 1}
    assert store.stats.latencies["insert"][0] > 0
    assert store.stats.latencies["update"][0] > 0

@pytest.mark.parametrize(("key", "expected"), [("user0", 0), ("user6284781860667377211", 6284781860667377211)])
def test_parse_ycsb_key(key: str, expected: int):
    assert parse_ycsb_key(key) == expected

@pytest.mark.parametrize("key", ["6284", "user", "userabc", f"user{1 << 64}"])
def test_parse_bad_ycsb_key(key: str):
    with pytest.raises(ContractError):
        parse_ycsb_key(key)

def test_record_is_durable_before_the_index(store: KvStore):
    arena = store.arena
    start = arena.event_count
    store.put(42, _fields(2))

    flushes = [e for e in arena.events if e.index >= start and e.kind == "flush"]
    tags = [e.tag for e in flushes]
    assert tags.index("data") > max(i for i, tag in enumerate(tags) if tag == "value")
    last_value = max(e.index for e in flushes if e.tag == "value")
    first_data = next(e.index for e in flushes if e.tag == "data")
    assert any(
        e.kind == "fence" and last_value < e.index < first_data
        for e in arena.events
    )

def test_crash_before_pointer_swing_keeps_old_field(store: KvStore):
    arena = store.arena
    store.put(3, _fields(0))
    snap = arena.snapshot()
    start = arena.event_count
    store.update_field(3, 1, b"n" * FIELD_SIZE)
    swing = next(
        e.index for e in arena.events
        if e.index >= start and e.kind == "atomic" and e.tag == "value"
    )

    arena.restore(snap)
    arena.arm_crash(swing)
    with pytest.raises(SimulatedCrash):
        store.update_field(3, 1, b"n" * FIELD_SIZE)

    reopened = KvStore(CircTree.open(PmArena.from_image(arena.crash(CrashPolicy.ALL_PERSISTED))))
    assert reopened.get(3) == b"".join(_fields(0))

def test_misses_from_many_threads_are_all_counted(store: KvStore):
    def miss_many(worker: int) -> None:
        for k in range(500):
            store.update_field(1_000_000 * (worker + 1) + k, 0, bytes(FIELD_SIZE))

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(miss_many, range(8)))
    assert store.stats.misses == 4000
    assert store.stats.counts == {"update": 4000}

def test_every_record_is_durable_before_its_key_is_indexed(monkeypatch: pytest.MonkeyPatch):
    arena = PmArena(capacity=1 << 25, track_stores=False, log_events=False)
    store = KvStore(CircTree.create(arena, 64))
    insert = store.tree.insert
    dirty_at_insert: list[int] = []

    def checked_insert(k: int, v: int) -> object:
        dirty_at_insert.append(arena.dirty_count())
        return insert(k, v)

    monkeypatch.setattr(store.tree, "insert", checked_insert)
    keys = random.Random(13).sample(range(1, 1 << 40), 10_000)
    for k in keys:
        store.put(k, _fields(k % 100))

    assert len(dirty_at_insert) == 10_000
    assert not any(dirty_at_insert)
    assert store.get(keys[-1]) == b"".join(_fields(keys[-1] % 100))
