"""Latches guarding a tree shared between threads.

Classes:
    TreeLatch
    NodeLocks
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Iterator

    from .node import CircNode


class TreeLatch:
    """Readers-writer latch, writers first.

    In-node operations and splits hold it shared and serialize on node
    locks. Merges hold it exclusive, so no shared holder sees a leaf
    leave its level.
    """

    def __init__(self) -> None:
        self.__cond = threading.Condition()
        self.__readers = 0
        self.__writer = False
        self.__waiting_writers = 0

    @contextmanager
    def shared(self) -> Iterator[None]:
        with self.__cond:
            while self.__writer or self.__waiting_writers:
                self.__cond.wait()
            self.__readers += 1
        try:
            yield
        finally:
            with self.__cond:
                self.__readers -= 1
                if not self.__readers:
                    self.__cond.notify_all()

    @contextmanager
    def exclusive(self) -> Iterator[None]:
        with self.__cond:
            self.__waiting_writers += 1
            while self.__writer or self.__readers:
                self.__cond.wait()
            self.__waiting_writers -= 1
            self.__writer = True
        try:
            yield
        finally:
            with self.__cond:
                self.__writer = False
                self.__cond.notify_all()


class NodeLocks:
    """One mutex per node, mirrored into the node's lock word."""

    def __init__(self) -> None:
        self.__table: dict[int, threading.Lock] = {}
        self.__guard = threading.Lock()

    def __lock_for(self, node: CircNode) -> threading.Lock:
        with self.__guard:
            return self.__table.setdefault(node.offset, threading.Lock())

    def acquire(self, node: CircNode, *, blocking: bool = True) -> bool:
        if not self.__lock_for(node).acquire(blocking=blocking):
            return False
        node.mark_locked(True)
        return True

    def release(self, node: CircNode) -> None:
        node.mark_locked(False)
        self.__lock_for(node).release()

    @contextmanager
    def hold(self, *nodes: CircNode) -> Iterator[None]:
        """Locks nodes in the given order, releases them in reverse."""
        taken: list[CircNode] = []
        try:
            for node in nodes:
                self.acquire(node)
                taken.append(node)
            yield
        finally:
            for node in reversed(taken):
                self.release(node)
