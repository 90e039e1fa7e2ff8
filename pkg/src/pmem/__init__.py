"""Simulated persistent memory with flush, fence and crash injection."""

from ._crash import CrashImage, CrashModel, CrashPolicy
from .arena import ArenaSnapshot, ArenaStats, Event, Handle, PmArena

__all__ = [
    "ArenaSnapshot",
    "ArenaStats",
    "CrashImage",
    "CrashModel",
    "CrashPolicy",
    "Event",
    "Handle",
    "PmArena",
]
