"""Flush counts of one insert and one delete on a sorted and a circular node.

Both nodes hold 8 slots with two pairs per cache line. The insert adds
a new second smallest key, the delete removes the smallest key.

Classes:
    Figure1Report

Functions:
    figure1(line_size: int = FIGURE1_LINE_SIZE) -> Figure1Report
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

from src.baselines import LinearNode, linear_delete, linear_insert
from src.circ import CircNode, KvPair, node_delete, node_insert
from src.pmem import PmArena

from ._consts import (
    FIGURE1_EXPECTED,
    FIGURE1_KEYS,
    FIGURE1_LINE_SIZE,
    FIGURE1_NEW_KEY,
    FIGURE1_NODE_SLOTS,
)

if TYPE_CHECKING:
    from collections.abc import Callable

_GROWN = tuple(sorted((*FIGURE1_KEYS, FIGURE1_NEW_KEY)))


@dataclass(frozen=True)
class Figure1Report:
    """Data line flushes and pairs shifted by each of the four operations."""

    linear_insert: int
    circ_insert: int
    linear_delete: int
    circ_delete: int
    linear_insert_shifts: int
    circ_insert_shifts: int
    linear_delete_shifts: int
    circ_delete_shifts: int

    @property
    def flushes(self) -> dict[str, int]:
        return {name: getattr(self, name) for name in FIGURE1_EXPECTED}

    @property
    def matches(self) -> bool:
        return self.flushes == FIGURE1_EXPECTED

    def to_dict(self) -> dict[str, object]:
        return {**asdict(self), "expected": dict(FIGURE1_EXPECTED), "matches": self.matches}


def _data_flushes(arena: PmArena) -> int:
    return arena.stats().flushes_by_tag.get("data", 0)

def _linear_node(arena: PmArena, keys: tuple[int, ...]) -> LinearNode:
    node = LinearNode.create(arena, FIGURE1_NODE_SLOTS)
    node.fill([KvPair(k, k + 1) for k in keys])
    return node

def _circ_node(arena: PmArena, keys: tuple[int, ...]) -> CircNode:
    node = CircNode.create(arena, FIGURE1_NODE_SLOTS, 0)
    node.format(0, 0, 0)
    for k in keys:
        node_insert(arena, node, k, k + 1)
    return node

def _linear_insert(arena: PmArena) -> Callable[[], int]:
    node = _linear_node(arena, FIGURE1_KEYS)
    return lambda: linear_insert(arena, node, FIGURE1_NEW_KEY, FIGURE1_NEW_KEY + 1)

def _circ_insert(arena: PmArena) -> Callable[[], int]:
    node = _circ_node(arena, FIGURE1_KEYS)
    return lambda: node_insert(arena, node, FIGURE1_NEW_KEY, FIGURE1_NEW_KEY + 1)

def _linear_delete(arena: PmArena) -> Callable[[], int]:
    node = _linear_node(arena, _GROWN)
    return lambda: linear_delete(arena, node, _GROWN[0])

def _circ_delete(arena: PmArena) -> Callable[[], int]:
    node = _circ_node(arena, _GROWN)
    return lambda: node_delete(arena, node, _GROWN[0])

def _measure(prepare: Callable[[PmArena], Callable[[], int]], line_size: int) -> tuple[int, int]:
    arena = PmArena(capacity=1 << 12, line_size=line_size)
    op = prepare(arena)
    before = _data_flushes(arena)
    shifts = op()
    return _data_flushes(arena) - before, shifts

def figure1(line_size: int = FIGURE1_LINE_SIZE) -> Figure1Report:
    """Replays the scenario, each operation on a fresh arena.

    Returns:
        Figure1Report: The counts, `matches` tells whether they are the
            expected 3, 2, 3 and 1 data line flushes.
    """
    counts: dict[str, int] = {}
    for name, prepare in (
        ("linear_insert", _linear_insert),
        ("circ_insert", _circ_insert),
        ("linear_delete", _linear_delete),
        ("circ_delete", _circ_delete),
    ):
        counts[name], counts[f"{name}_shifts"] = _measure(prepare, line_size)

    report = Figure1Report(**counts)
    level = logging.INFO if report.matches else logging.WARNING
    logging.log(level, "Data line flushes %s, expected %s", report.flushes, FIGURE1_EXPECTED)
    return report
