"""Crash-injection campaigns over scripted tree operations.

A scenario preloads a small tree of 8-slot nodes, then runs one
operation. The operation is replayed once per persistence event with a
crash armed right before it. Every durable image reachable at that
point is re-opened, recovered and verified, and its contents must equal
the tree either before or after the operation.

The crash model picks both the images and how the tree persists: under
WORD any subset of the dirty words survives and the tree flushes each
store on its own, under LINE a dirty line keeps a prefix of its stores
and the tree flushes line by line.

Classes:
    Scenario
    CrashFailure
    CampaignReport

Functions:
    crash_campaign(script: str, seed: int, *, max_dirty: int = MAX_ENUM_DIRTY,
                   model: CrashModel = CrashModel.WORD) -> CampaignReport
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from src.circ import CircTree
from src.circ._layout import Superblock
from src.consts import MAX_ENUM_DIRTY
from src.pmem import CrashModel, CrashPolicy, PmArena
from src.pmem.errors import SimulatedCrash

from ._consts import CRASH_NODE_SLOTS, CRASH_SAMPLES
from .errors import ConfigError

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

    from src.hinting import Key, Value
    from src.pmem import CrashImage

ARENA_BYTES = 1 << 16
LINE_SIZE = 64


@dataclass(frozen=True)
class Scenario:
    name: str
    preload: tuple[Key, ...]
    op: Callable[[CircTree], object]


@dataclass(frozen=True)
class CrashFailure:
    """A crash image whose recovery broke, with what replays it."""

    script: str
    scenario: str
    event: int
    image: int
    seed: int
    reason: str


@dataclass
class CampaignReport:
    script: str
    model: CrashModel = CrashModel.WORD
    crash_points: int = 0
    points_tested: int = 0
    failures: list[CrashFailure] = field(default_factory=list)
    cases: set[str] = field(default_factory=set)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, object]:
        return {
            "script": self.script,
            "model": self.model.value,
            "crash_points": self.crash_points,
            "points_tested": self.points_tested,
            "failures": [vars(f) for f in self.failures],
            "cases": sorted(self.cases),
        }


def _ins(k: Key) -> Callable[[CircTree], object]:
    return lambda tree: tree.insert(k, k + 1)

def _del(k: Key) -> Callable[[CircTree], object]:
    return lambda tree: tree.delete(k)

_FIVE = (20, 30, 40, 50, 60)
_SEVEN = (20, 30, 40, 50, 60, 70, 80)
_FULL = (10, 20, 30, 40, 50, 60, 70, 80)
_TWO_LEAVES = (10, 20, 30, 40, 50, 60, 70, 80, 90)
# Base sits on the last slot once 30 went in
_WRAPPED = (40, 50, 60, 30)

SCRIPTS: dict[str, tuple[Scenario, ...]] = {
    "insert_left": (
        Scenario("one_shift", _FIVE, _ins(25)),
        Scenario("full_ring", _SEVEN, _ins(35)),
        Scenario("no_shift", (20, 30, 40), _ins(10)),
        Scenario("wrapped", _WRAPPED, _ins(35)),
    ),
    "insert_right": (
        Scenario("one_shift", _FIVE, _ins(55)),
        Scenario("append", (20, 30, 40), _ins(50)),
        Scenario("full_ring", _SEVEN, _ins(45)),
    ),
    "split": (
        Scenario("new_key_right", _FULL, _ins(90)),
        Scenario("new_key_left", _FULL, _ins(15)),
        Scenario("with_parent", (*_TWO_LEAVES, 95, 96, 97), _ins(98)),
    ),
    "merge": (
        Scenario("first_leaf", _TWO_LEAVES, _del(20)),
        Scenario("greatest_of_leaf", _TWO_LEAVES, _del(40)),
    ),
    "delete_ends": (
        Scenario("smallest", _SEVEN, _del(20)),
        Scenario("greatest", _SEVEN, _del(80)),
        Scenario("wrapped_smallest", _WRAPPED, _del(30)),
    ),
    "delete_mid": (
        Scenario("pull_left", _SEVEN, _del(60)),
        Scenario("push_right", _SEVEN, _del(40)),
        Scenario("full_pull_left", _FULL, _del(60)),
        Scenario("full_push_right", _FULL, _del(40)),
    ),
}


def _contents(tree: CircTree) -> dict[Key, Value]:
    return dict(tree.items())

def _images(arena: PmArena, seed: int, max_dirty: int, model: CrashModel) -> Iterable[CrashImage]:
    if arena.dirty_count() > max_dirty:
        return [  # type: ignore[misc]
            arena.crash(CrashPolicy.RANDOM, seed=seed + i, model=model)
            for i in range(CRASH_SAMPLES)
        ]
    return arena.iter_crashes(model)

def _check(
    image: CrashImage,
    pre: dict[Key, Value],
    post: dict[Key, Value],
    model: CrashModel,
) -> tuple[str | None, set[str]]:
    """Recovers one image, returns a failure reason and the repairs applied."""
    try:
        tree = CircTree.open(PmArena.from_image(image, line_size=LINE_SIZE), crash_model=model)
        tree.verify()
        got = _contents(tree)
    except Exception as e:  # noqa: BLE001
        return f"{type(e).__name__}: {e}", set()

    cases = tree.last_recovery.cases if tree.last_recovery else set()
    if got not in (pre, post):
        return f"recovered {sorted(got)}, neither before nor after", cases
    return None, cases

def _run_scenario(script: str, scenario: Scenario, seed: int, max_dirty: int, report: CampaignReport) -> None:
    arena = PmArena(capacity=ARENA_BYTES, line_size=LINE_SIZE, max_dirty=max_dirty)
    tree = CircTree.create(arena, CRASH_NODE_SLOTS, crash_model=report.model)
    for k in scenario.preload:
        tree.insert(k, k + 1)

    pre = _contents(tree)
    snap = arena.snapshot()
    first = arena.event_count
    scenario.op(tree)
    post = _contents(tree)
    last = arena.event_count

    for event in range(first, last):
        arena.restore(snap)
        arena.arm_crash(event)
        try:
            scenario.op(CircTree(arena, Superblock(arena), crash_model=report.model))
        except SimulatedCrash:
            pass
        else:
            logging.warning("%s/%s: no crash at event %d", script, scenario.name, event)
            continue

        report.crash_points += 1
        for i, image in enumerate(_images(arena, seed + event, max_dirty, report.model)):
            report.points_tested += 1
            reason, cases = _check(image, pre, post, report.model)
            report.cases |= cases
            if reason is not None:
                logging.error("%s/%s event %d image %d: %s !", script, scenario.name, event, i, reason)
                report.failures.append(CrashFailure(script, scenario.name, event, i, seed + event, reason))

def crash_campaign(
    script: str,
    seed: int,
    *,
    max_dirty: int = MAX_ENUM_DIRTY,
    model: CrashModel = CrashModel.WORD,
) -> CampaignReport:
    """Runs every scenario of a script.

    Args:
        script (str): One of insert_left, insert_right, split, merge,
            delete_ends and delete_mid.
        seed (int): Base seed of sampled images, used when a crash
            point has more than max_dirty dirty words.
        max_dirty (int): Bound for exhaustive enumeration.
        model (CrashModel): Crash images to check, and the matching
            persistence of the tree.

    Raises:
        ConfigError: Unknown script.

    Returns:
        CampaignReport: Points tested, failures and recovery cases seen.
    """
    if script not in SCRIPTS:
        logging.error("Unknown crash script %r !", script)
        raise ConfigError(script)

    report = CampaignReport(script, model)
    for scenario in SCRIPTS[script]:
        _run_scenario(script, scenario, seed, max_dirty, report)

    logging.info(
        "Crash script %s under %s: %d points, %d images, %d failures, cases %s",
        script, model.value, report.crash_points, report.points_tested, len(report.failures), sorted(report.cases),
    )
    return report
