from __future__ import annotations

import math

import numpy as np
import pytest

from src.bench import WorkloadSpec, geometric_mean_ns, latency_sweep, make_arena, make_index, p99_ns, run
from src.bench._consts import NODE_SIZES
from src.bench.errors import ConfigError


@pytest.mark.parametrize("changes", [
    {"tree_kind": "btree"},
    {"distribution": "latest"},
    {"phase": "scan"},
    {"node_bytes": 1000},
    {"node_bytes": 64},
    {"key_count": 0},
    {"threads": 0},
    {"theta": -1.0},
])
def test_bad_spec(changes: dict[str, object]):
    with pytest.raises(ConfigError):
        WorkloadSpec(**changes)

def test_geometric_mean():
    assert geometric_mean_ns([]) == 0.0
    assert math.isclose(geometric_mean_ns([100, 10_000]), 1000.0)
    assert math.isclose(geometric_mean_ns([0, 100]), 10.0)

def test_p99_nearest_rank():
    assert p99_ns([]) == 0
    assert p99_ns(list(range(10, 0, -1))) == 10
    assert p99_ns(list(range(1, 51))) == 50
    assert p99_ns([5] * 300 + [900] * 4) == 900
    assert p99_ns([7]) == 7

@pytest.mark.parametrize("tree_kind", ["circ", "circ_ls", "linear", "append"])
def test_runs_are_reproducible(tree_kind: str):
    spec = WorkloadSpec(tree_kind=tree_kind, node_bytes=512, key_count=600, seed=3)
    first, second = run(spec), run(spec)
    assert first.to_dict() == second.to_dict()
    assert first.by_kind["insert"]["count"] == 600
    assert first.splits > 0

def test_counters_match_the_event_log():
    spec = WorkloadSpec(node_bytes=512, key_count=300)
    arena = make_arena(spec, log_events=True)
    report = run(spec, arena=arena)

    flushes = [e for e in arena.events if e.kind == "flush"]
    assert report.flush_count == len(flushes)
    assert report.fence_count == sum(1 for e in arena.events if e.kind == "fence")
    assert report.bytes_flushed == len(flushes) * spec.line_size
    assert report.data_flushes == sum(1 for e in flushes if e.tag == "data")

def test_session_phase_mixes_reads_and_updates():
    spec = WorkloadSpec(
        node_bytes   = 1024,
        key_count    = 300,
        phase        = "session_store",
        distribution = "zipfian",
        ops          = 400,
    )
    report = run(spec)
    assert report.misses == 0
    assert report.by_kind["search"]["count"] + report.by_kind["update"]["count"] == 400
    assert report.by_kind["update"]["count"] > 0
    assert report.flushes_by_tag["value"] > 0

def test_report_csv_row_flattens_scalars():
    report = run(WorkloadSpec(node_bytes=512, key_count=50))
    row = report.csv_row()
    assert row["tree_kind"] == "circ"
    assert row["flush_count"] == report.flush_count
    assert "by_kind" not in row

@pytest.mark.parametrize("node_bytes", NODE_SIZES)
def test_circular_nodes_flush_less_than_sorted_ones(node_bytes: int):
    reports = {
        kind: run(WorkloadSpec(tree_kind=kind, node_bytes=node_bytes, key_count=3000, seed=5))
        for kind in ("circ", "linear")
    }
    assert reports["circ"].bytes_flushed < reports["linear"].bytes_flushed
    assert reports["circ"].shift_count < reports["linear"].shift_count
    if node_bytes >= 2048:
        assert reports["circ"].geo_mean_latency_ns < reports["linear"].geo_mean_latency_ns

@pytest.mark.parametrize("node_bytes", [512, 4096])
def test_linear_scan_costs_no_more_flush_time(node_bytes: int):
    circ, circ_ls = (
        run(WorkloadSpec(tree_kind=kind, node_bytes=node_bytes, key_count=2000, seed=4))
        for kind in ("circ", "circ_ls")
    )
    assert circ_ls.bytes_flushed == circ.bytes_flushed
    assert math.isclose(circ_ls.geo_mean_latency_ns, circ.geo_mean_latency_ns, rel_tol=0.05)

def test_volatile_kinds_pay_only_for_shifts():
    free = run(WorkloadSpec(tree_kind="volatile_circ", node_bytes=1024, key_count=800, seed=2))
    assert free.geo_mean_latency_ns == 1.0
    assert free.p99_latency_ns == 0

    reports = {
        kind: run(WorkloadSpec(tree_kind=kind, node_bytes=1024, key_count=800, seed=2, shift_cost=10))
        for kind in ("circ", "volatile_circ", "volatile_linear")
    }
    assert reports["volatile_circ"].shift_count == reports["circ"].shift_count
    assert reports["volatile_circ"].geo_mean_latency_ns < reports["circ"].geo_mean_latency_ns
    assert reports["volatile_circ"].shift_count < reports["volatile_linear"].shift_count
    assert reports["volatile_circ"].geo_mean_latency_ns < reports["volatile_linear"].geo_mean_latency_ns

def test_negative_shift_cost():
    with pytest.raises(ConfigError):
        WorkloadSpec(shift_cost=-1)

def test_latency_sweep_orders_runs_and_scales_flush_time():
    spec = WorkloadSpec(node_bytes=512, key_count=300, seed=6)
    reports = latency_sweep(spec, ["circ", "linear"], [200, 600])
    assert [(r.spec["flush_latency"], r.spec["tree_kind"]) for r in reports] == [
        (200, "circ"), (200, "linear"), (600, "circ"), (600, "linear"),
    ]
    assert reports[0].flush_count == reports[2].flush_count
    assert reports[2].geo_mean_latency_ns > reports[0].geo_mean_latency_ns

@pytest.mark.slow
def test_flushed_bytes_ratio_grows_with_node_size():
    ratios = []
    for node_bytes in NODE_SIZES:
        reports = {
            kind: run(WorkloadSpec(tree_kind=kind, node_bytes=node_bytes, key_count=20_000))
            for kind in ("circ", "linear")
        }
        assert reports["circ"].bytes_flushed < reports["linear"].bytes_flushed
        if node_bytes >= 2048:
            assert reports["circ"].geo_mean_latency_ns < reports["linear"].geo_mean_latency_ns
        ratios.append(reports["linear"].bytes_flushed / reports["circ"].bytes_flushed)
    assert all(a < b for a, b in zip(ratios, ratios[1:]))

@pytest.mark.slow
@pytest.mark.parametrize("node_bytes", NODE_SIZES)
@pytest.mark.parametrize("tree_kind", ["circ", "circ_ls", "linear", "append"])
def test_every_tree_kind_matches_a_sorted_oracle(tree_kind: str, node_bytes: int):
    spec = WorkloadSpec(tree_kind=tree_kind, node_bytes=node_bytes, key_count=100_000)
    index = make_index(spec, make_arena(spec))
    rng = np.random.default_rng((7, node_bytes))
    oracle: dict[int, int] = {}

    for raw, roll in zip(rng.integers(1, 20_000, size=100_000), rng.random(100_000), strict=True):
        k = int(raw)
        if roll < 0.5:
            if k not in oracle:
                index.insert(k, k + 1)
                oracle[k] = k + 1
        elif roll < 0.75:
            index.delete(k)
            oracle.pop(k, None)
        else:
            assert index.search(k) == oracle.get(k)

    assert dict(index.items()) == dict(sorted(oracle.items()))
