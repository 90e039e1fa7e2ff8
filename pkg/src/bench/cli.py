"""The bench command line.

Sub-commands:
    run      one workload over one tree kind
    figure1  flush counts of the sorted versus circular node scenario
    crash    crash-injection campaigns
    ycsb-a   SessionStore runs over a range of thread counts
    sweep    load runs of several tree kinds over several flush latencies

Functions:
    build_parser() -> argparse.ArgumentParser
    dispatch(args: argparse.Namespace) -> int
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from src.consts import APPLICATION_VERSION, MAX_ENUM_DIRTY
from src.pmem import CrashModel
from src.pmem._consts import DEFAULT_FLUSH_LATENCY, DEFAULT_LINE_SIZE

from ._consts import DEFAULT_THETA, DISTRIBUTIONS, FIGURE1_LINE_SIZE, LATENCY_SWEEP, PHASES, TREE_KINDS
from .crash import SCRIPTS, crash_campaign
from .errors import ConfigError
from .figure1 import figure1
from .report import write_csv, write_json
from .workload import WorkloadSpec, latency_sweep, run

DEFAULT_THREADS = [1, 2, 4, 8]


def _workload_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tree", choices=TREE_KINDS, default="circ")
    parser.add_argument("--node-bytes", type=int, default=4096)
    parser.add_argument("--keys", type=int, default=100_000)
    parser.add_argument("--theta", type=float, default=DEFAULT_THETA)
    parser.add_argument("--flush-latency", type=int, default=DEFAULT_FLUSH_LATENCY)
    parser.add_argument("--line-size", type=int, default=DEFAULT_LINE_SIZE)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--ops", type=int, default=0, help="session operations, defaults to --keys")
    parser.add_argument("--wall-clock", action="store_true", help="time operations in wall clock ns")
    parser.add_argument("--shift-cost", type=int, default=0, help="virtual ns per shifted pair")
    parser.add_argument("--out", type=Path, help="JSON report path")
    parser.add_argument("--csv", type=Path, help="CSV report path")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Circular-node B+-tree benchmarks on simulated persistent memory.",
    )
    parser.add_argument("--version", action="version", version=".".join(map(str, APPLICATION_VERSION)))
    parser.add_argument("-v", "--verbose", action="count", default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="one workload over one tree kind")
    _workload_options(run_p)
    run_p.add_argument("--dist", choices=DISTRIBUTIONS, default="uniform")
    run_p.add_argument("--phase", choices=PHASES, default="load")
    run_p.add_argument("--threads", type=int, default=1)

    fig_p = sub.add_parser("figure1", help="sorted versus circular node flush counts")
    fig_p.add_argument("--line-size", type=int, default=FIGURE1_LINE_SIZE)
    fig_p.add_argument("--out", type=Path)

    crash_p = sub.add_parser("crash", help="crash-injection campaign")
    crash_p.add_argument("--script", choices=[*SCRIPTS, "all"], default="all")
    crash_p.add_argument("--seed", type=int, default=1)
    crash_p.add_argument("--max-dirty", type=int, default=MAX_ENUM_DIRTY)
    crash_p.add_argument("--model", choices=[m.value for m in CrashModel], default=CrashModel.WORD.value)
    crash_p.add_argument("--out", type=Path)

    ycsb_p = sub.add_parser("ycsb-a", help="SessionStore over several thread counts")
    _workload_options(ycsb_p)
    ycsb_p.add_argument("--threads", type=int, nargs="+", default=DEFAULT_THREADS)

    sweep_p = sub.add_parser("sweep", help="load runs over several flush latencies")
    _workload_options(sweep_p)
    sweep_p.add_argument("--kinds", choices=TREE_KINDS, nargs="+", default=["circ", "linear", "append"])
    sweep_p.add_argument("--latencies", type=int, nargs="+", default=list(LATENCY_SWEEP))

    return parser

# -------------------------------------------------------------------- commands

def _spec(args: argparse.Namespace, **overrides: object) -> WorkloadSpec:
    fields: dict[str, object] = {
        "tree_kind":     args.tree,
        "node_bytes":    args.node_bytes,
        "key_count":     args.keys,
        "theta":         args.theta,
        "flush_latency": args.flush_latency,
        "line_size":     args.line_size,
        "seed":          args.seed,
        "ops":           args.ops,
        "wall_clock":    args.wall_clock,
        "shift_cost":    args.shift_cost,
    }
    fields.update(overrides)
    return WorkloadSpec(**fields)  # type: ignore[arg-type]

def _emit(args: argparse.Namespace, payload: object, rows: list[dict[str, object]] | None = None) -> None:
    if args.out is not None:
        write_json(payload, args.out)
    if rows is not None and getattr(args, "csv", None) is not None:
        write_csv(rows, args.csv)

def _run(args: argparse.Namespace) -> int:
    spec = _spec(args, distribution=args.dist, phase=args.phase, threads=args.threads)
    report = run(spec)
    _emit(args, report.to_dict(), [report.csv_row()])
    print(  # noqa: T201
        f"{spec.tree_kind}: geo-mean {report.geo_mean_latency_ns:.1f} ns, "
        f"p99 {report.p99_latency_ns} ns, {report.bytes_flushed} bytes flushed",
    )
    return 0

def _figure1(args: argparse.Namespace) -> int:
    report = figure1(args.line_size)
    _emit(args, report.to_dict())
    for name, count in report.flushes.items():
        print(f"{name:14} {count} data line flushes")  # noqa: T201
    return 0 if report.matches else 1

def _crash(args: argparse.Namespace) -> int:
    scripts = list(SCRIPTS) if args.script == "all" else [args.script]
    model = CrashModel(args.model)
    reports = [crash_campaign(script, args.seed, max_dirty=args.max_dirty, model=model) for script in scripts]
    _emit(args, [report.to_dict() for report in reports])

    for report in reports:
        print(  # noqa: T201
            f"{report.script:12} {report.points_tested:6} images "
            f"{len(report.failures):3} failures  cases {' '.join(sorted(report.cases))}",
        )
    return 0 if all(report.ok for report in reports) else 1

def _ycsb_a(args: argparse.Namespace) -> int:
    reports = [
        run(_spec(args, distribution="zipfian", phase="session_store", threads=threads))
        for threads in args.threads
    ]
    _emit(args, [report.to_dict() for report in reports], [report.csv_row() for report in reports])

    for threads, report in zip(args.threads, reports, strict=True):
        print(  # noqa: T201
            f"{threads} threads: search p99 {report.by_kind['search']['p99_ns']:.0f} ns, "
            f"update p99 {report.by_kind['update']['p99_ns']:.0f} ns",
        )
    return 0

def _sweep(args: argparse.Namespace) -> int:
    reports = latency_sweep(_spec(args), args.kinds, args.latencies)
    _emit(args, [report.to_dict() for report in reports], [report.csv_row() for report in reports])

    for report in reports:
        print(  # noqa: T201
            f"{report.spec['flush_latency']:4} ns {report.spec['tree_kind']:16} "
            f"geo-mean {report.geo_mean_latency_ns:.1f} ns, p99 {report.p99_latency_ns} ns",
        )
    return 0

_COMMANDS = {
    "run":     _run,
    "figure1": _figure1,
    "crash":   _crash,
    "ycsb-a":  _ycsb_a,
    "sweep":   _sweep,
}

def dispatch(args: argparse.Namespace) -> int:
    """Runs the parsed command, returns the process exit code."""
    try:
        return _COMMANDS[args.command](args)
    except ConfigError:
        logging.exception("Invalid configuration !")
        return 2
