"""Benchmarks, scripted scenarios and crash campaigns."""

from .crash import SCRIPTS, CampaignReport, CrashFailure, crash_campaign
from .figure1 import Figure1Report, figure1
from .keygen import uniform_keys, zipf_keys
from .workload import (
    RunReport,
    WorkloadSpec,
    geometric_mean_ns,
    latency_sweep,
    make_arena,
    make_index,
    p99_ns,
    run,
)

__all__ = [
    "SCRIPTS",
    "CampaignReport",
    "CrashFailure",
    "Figure1Report",
    "RunReport",
    "WorkloadSpec",
    "crash_campaign",
    "figure1",
    "geometric_mean_ns",
    "latency_sweep",
    "make_arena",
    "make_index",
    "p99_ns",
    "run",
    "uniform_keys",
    "zipf_keys",
]
