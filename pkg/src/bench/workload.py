"""Seeded benchmark runs over any tree kind.

A run loads key_count distinct uniform keys. The session_store phase
then stores a 1000-byte record per key instead of a plain value and
issues a 50/50 mix of record reads and single-field updates, picking
loaded keys uniformly or by Zipf rank.

Latencies are virtual: the growth of the calling thread's arena clock
over one operation, so a run with a fixed seed and one thread is
reproducible to the byte. The clock moves by the flush latency per
flushed line and by shift_cost per pair a shift moves. Volatile kinds
run the same nodes with free flushes, so only shifts cost time.

Classes:
    WorkloadSpec
    RunReport

Functions:
    geometric_mean_ns(latencies: Sequence[int]) -> float
    p99_ns(latencies: Sequence[int]) -> int
    make_arena(spec: WorkloadSpec, *, log_events: bool = False) -> PmArena
    make_index(spec: WorkloadSpec, arena: PmArena) -> Index
    run(spec: WorkloadSpec, *, arena: PmArena | None = None) -> RunReport
    latency_sweep(spec: WorkloadSpec, kinds: Sequence[str], latencies: Sequence[int]) -> list[RunReport]
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from src.baselines import BaselineKind, BaselineTree
from src.circ import CircTree
from src.circ._consts import PAIR_SIZE
from src.kv import KvStore
from src.kv._consts import FIELD_COUNT, FIELD_SIZE
from src.pmem import PmArena
from src.pmem._consts import DEFAULT_FLUSH_LATENCY, DEFAULT_LINE_SIZE

from ._consts import (
    DEFAULT_THETA,
    DISTRIBUTIONS,
    LATENCY_FLOOR_NS,
    PHASES,
    SESSION_FIELD,
    TREE_KINDS,
    VOLATILE_KINDS,
)
from .errors import ConfigError
from .keygen import uniform_keys, zipf_keys

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from src.hinting import Index

MIN_NODE_SLOTS = 8

# Arena bytes reserved per key, leaked nodes included
_TREE_BYTES_PER_KEY = 8 * 24
_RECORD_BYTES = (FIELD_COUNT + 1) * 128


@dataclass(frozen=True)
class WorkloadSpec:  # pylint: disable=too-many-instance-attributes
    """Configuration of one run, validated on construction.

    Raises:
        ConfigError: A field is out of its domain.
    """

    tree_kind: str = "circ"
    node_bytes: int = 4096
    key_count: int = 100_000
    distribution: str = "uniform"
    theta: float = DEFAULT_THETA
    flush_latency: int = DEFAULT_FLUSH_LATENCY
    line_size: int = DEFAULT_LINE_SIZE
    threads: int = 1
    seed: int = 1
    phase: str = "load"
    ops: int = 0
    wall_clock: bool = False
    shift_cost: int = 0

    def __post_init__(self) -> None:
        slots = self.node_bytes // PAIR_SIZE
        checks = (
            (self.tree_kind in TREE_KINDS, f"unknown tree kind {self.tree_kind!r}"),
            (self.distribution in DISTRIBUTIONS, f"unknown distribution {self.distribution!r}"),
            (self.phase in PHASES, f"unknown phase {self.phase!r}"),
            (
                self.node_bytes % PAIR_SIZE == 0 and slots >= MIN_NODE_SLOTS and not slots & (slots - 1),
                f"node size {self.node_bytes} is not 16 times a power of two >= 8",
            ),
            (self.key_count > 0, "no key to load"),
            (self.threads > 0, "no thread"),
            (self.theta >= 0, "negative theta"),
            (self.ops >= 0, "negative op count"),
            (self.flush_latency >= 0, "negative flush latency"),
            (self.shift_cost >= 0, "negative shift cost"),
        )
        for ok, reason in checks:
            if not ok:
                logging.error("Bad workload: %s !", reason)
                raise ConfigError(reason)

    @property
    def session_ops(self) -> int:
        return self.ops or self.key_count

    @property
    def volatile(self) -> bool:
        return self.tree_kind in VOLATILE_KINDS

    @property
    def base_kind(self) -> str:
        """The node layout, volatile kinds mapped to their persistent one."""
        return VOLATILE_KINDS.get(self.tree_kind, self.tree_kind)


@dataclass
class RunReport:  # pylint: disable=too-many-instance-attributes
    spec: dict[str, object]
    geo_mean_latency_ns: float
    p99_latency_ns: int
    thread_geo_means_ns: list[float]
    by_kind: dict[str, dict[str, float]]
    flush_count: int
    fence_count: int
    bytes_flushed: int
    data_flushes: int
    shift_count: int
    splits: int
    merges: int
    misses: int = 0
    flushes_by_tag: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, object]:
        return asdict(self)

    def csv_row(self) -> dict[str, object]:
        """Spec fields followed by the scalar counters."""
        row = dict(self.spec)
        row.update({
            name: value for name, value in asdict(self).items()
            if isinstance(value, int | float)
        })
        return row


def geometric_mean_ns(latencies: Sequence[int]) -> float:
    """exp of the mean log latency, each latency floored at 1 ns."""
    if not len(latencies):
        return 0.0
    lats = np.maximum(np.asarray(latencies, dtype=np.float64), LATENCY_FLOOR_NS)
    return float(np.exp(np.log(lats).mean()))

def p99_ns(latencies: Sequence[int]) -> int:
    """Nearest rank: the ceil(0.99 * n)-th smallest latency."""
    if not len(latencies):
        return 0
    ordered = np.sort(np.asarray(latencies, dtype=np.int64))
    return int(ordered[math.ceil(0.99 * len(ordered)) - 1])

def make_arena(spec: WorkloadSpec, *, log_events: bool = False) -> PmArena:
    """Arena large enough for the run, crash tracking off.

    Flushes of a volatile kind cost no time.
    """
    size = spec.key_count * _TREE_BYTES_PER_KEY + 64 * (spec.node_bytes + 256)
    if spec.phase == "session_store":
        size += spec.key_count * _RECORD_BYTES + spec.session_ops * 128
    size = -(-size // spec.line_size) * spec.line_size
    return PmArena(
        capacity      = size,
        line_size     = spec.line_size,
        flush_latency = 0 if spec.volatile else spec.flush_latency,
        shift_cost    = spec.shift_cost,
        track_stores  = False,
        log_events    = log_events,
    )

def make_index(spec: WorkloadSpec, arena: PmArena) -> Index:
    kind = spec.base_kind
    if kind in ("circ", "circ_ls"):
        return CircTree.create(
            arena,
            spec.node_bytes // PAIR_SIZE,
            linear_search = kind == "circ_ls",
        )
    return BaselineTree(arena, spec.node_bytes, BaselineKind(kind))

# --------------------------------------------------------------------- workers

def _timer(spec: WorkloadSpec, arena: PmArena) -> Callable[[], int]:
    if spec.wall_clock:
        return time.perf_counter_ns
    return arena.thread_clock

def _record_bytes(rng: np.random.Generator) -> list[bytes]:
    blob = rng.bytes(FIELD_COUNT * FIELD_SIZE)
    return [blob[i * FIELD_SIZE:(i + 1) * FIELD_SIZE] for i in range(FIELD_COUNT)]

def _parallel(spec: WorkloadSpec, job: Callable[[int], dict[str, list[int]]]) -> list[dict[str, list[int]]]:
    if spec.threads == 1:
        return [job(0)]
    with ThreadPoolExecutor(max_workers=spec.threads) as pool:
        return list(pool.map(job, range(spec.threads)))

def _load(spec: WorkloadSpec, index: Index, store: KvStore | None, keys: np.ndarray) -> list[dict[str, list[int]]]:
    clock = _timer(spec, index.arena)

    def job(worker: int) -> dict[str, list[int]]:
        rng = np.random.default_rng((spec.seed, worker))
        lats = []
        for key in keys[worker::spec.threads]:
            k = int(key)
            start = clock()
            if store is None:
                index.insert(k, k + 1)
            else:
                store.put(k, _record_bytes(rng))
            lats.append(clock() - start)
        return {"insert": lats}

    return _parallel(spec, job)

def _session(spec: WorkloadSpec, store: KvStore, keys: np.ndarray) -> list[dict[str, list[int]]]:
    clock = _timer(spec, store.arena)
    per_thread = -(-spec.session_ops // spec.threads)

    def job(worker: int) -> dict[str, list[int]]:
        rng = np.random.default_rng((spec.seed, spec.threads + worker))
        if spec.distribution == "zipfian":
            picks = zipf_keys(per_thread, spec.theta, len(keys), int(rng.integers(1 << 31)))
        else:
            picks = rng.integers(0, len(keys), size=per_thread)
        reads = rng.random(per_thread) < 0.5

        lats: dict[str, list[int]] = {"search": [], "update": []}
        for pick, read in zip(picks, reads, strict=True):
            k = int(keys[pick])
            start = clock()
            if read:
                store.get(k)
                lats["search"].append(clock() - start)
            else:
                store.update_field(k, SESSION_FIELD, rng.bytes(FIELD_SIZE))
                lats["update"].append(clock() - start)
        return lats

    return _parallel(spec, job)

# ------------------------------------------------------------------------- run

def run(spec: WorkloadSpec, *, arena: PmArena | None = None) -> RunReport:
    """Executes one run and reports latencies with the final counters.

    Args:
        spec (WorkloadSpec): The run.
        arena (PmArena | None): Arena to use, one sized by `make_arena`
            otherwise.

    Returns:
        RunReport: Latency statistics of the measured phase, and the
            arena and tree counters at the end of the run.
    """
    arena = arena or make_arena(spec)
    index = make_index(spec, arena)
    keys = uniform_keys(spec.key_count, spec.seed)
    logging.info(
        "Running %s on %d keys, %dB nodes, %s phase",
        spec.tree_kind, spec.key_count, spec.node_bytes, spec.phase,
    )

    began = time.perf_counter()
    store = KvStore(index) if spec.phase == "session_store" else None
    results = _load(spec, index, store, keys)
    if store is not None:
        results = _session(spec, store, keys)
    wall = time.perf_counter() - began

    merged: dict[str, list[int]] = {}
    for result in results:
        for kind, lats in result.items():
            merged.setdefault(kind, []).extend(lats)
    every = [lat for lats in merged.values() for lat in lats]

    stats = arena.stats()
    report = RunReport(
        spec                = asdict(spec),
        geo_mean_latency_ns = geometric_mean_ns(every),
        p99_latency_ns      = p99_ns(every),
        thread_geo_means_ns = [
            geometric_mean_ns([lat for lats in result.values() for lat in lats])
            for result in results
        ],
        by_kind             = {
            kind: {"count": len(lats), "geo_mean_ns": geometric_mean_ns(lats), "p99_ns": p99_ns(lats)}
            for kind, lats in merged.items()
        },
        flush_count         = stats.flush_count,
        fence_count         = stats.fence_count,
        bytes_flushed       = stats.bytes_flushed,
        data_flushes        = stats.flushes_by_tag.get("data", 0),
        shift_count         = stats.shift_count,
        splits              = index.splits,
        merges              = index.merges,
        misses              = store.stats.misses if store is not None else 0,
        flushes_by_tag      = stats.flushes_by_tag,
    )
    logging.info(
        "%s: geo-mean %.1f ns, p99 %d ns, %d bytes flushed in %.1fs",
        spec.tree_kind, report.geo_mean_latency_ns, report.p99_latency_ns, report.bytes_flushed, wall,
    )
    return report

def latency_sweep(spec: WorkloadSpec, kinds: Sequence[str], latencies: Sequence[int]) -> list[RunReport]:
    """Runs spec once per tree kind and flush latency.

    Args:
        spec (WorkloadSpec): Fields shared by every run.
        kinds (Sequence[str]): Tree kinds, in report order.
        latencies (Sequence[int]): Flush latencies in ns.

    Raises:
        ConfigError: A kind or latency is invalid.

    Returns:
        list[RunReport]: Latencies outer, kinds inner.
    """
    return [
        run(replace(spec, tree_kind=kind, flush_latency=latency))
        for latency in latencies
        for kind in kinds
    ]
