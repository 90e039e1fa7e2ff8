"""Shared fixtures: small arenas and trees of 8-slot nodes."""

from __future__ import annotations

import pytest

from src.circ import CircTree
from src.pmem import PmArena


@pytest.fixture
def arena() -> PmArena:
    return PmArena(capacity=1 << 20)

@pytest.fixture
def small_tree(arena: PmArena) -> CircTree:
    return CircTree.create(arena, 8)

@pytest.fixture
def pair_lines() -> PmArena:
    """Two pairs per cache line."""
    return PmArena(capacity=1 << 16, line_size=32)
