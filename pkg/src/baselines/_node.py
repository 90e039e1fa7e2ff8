"""Header shared by both baseline node kinds.

Header words: 0 array offset, 1 count, 2 lock, 3 right sibling. Append
nodes leave the count word alone and derive their length from the log.

Classes:
    BaselineNode
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from src.pmem import Handle

from ._consts import HEADER_BYTES

if TYPE_CHECKING:
    from src.hinting import Offset
    from src.pmem import PmArena

HDR_ARRAY = 0
HDR_COUNT = 8
HDR_LOCK = 16
HDR_SIBLING = 24


class BaselineNode:
    """A header block plus one array, both in the arena."""

    def __init__(self, arena: PmArena, offset: Offset, array_bytes: int) -> None:
        self.arena = arena
        self.offset = offset
        self.header = Handle(offset, HEADER_BYTES)
        self.array = Handle(arena.read_word(self.header, HDR_ARRAY), array_bytes)

    @classmethod
    def _allocate(cls, arena: PmArena, array_bytes: int) -> tuple[Handle, Handle]:
        header = arena.alloc(HEADER_BYTES)
        array = arena.alloc(array_bytes)
        arena.write_word(header, HDR_ARRAY, array.offset, tag="header")
        arena.flush_line(header, HDR_ARRAY, tag="header")
        return header, array

    @property
    def count(self) -> int:
        return self.arena.read_word(self.header, HDR_COUNT)

    @property
    def sibling(self) -> Offset:
        return self.arena.read_word(self.header, HDR_SIBLING)

    def __swing(self, off: int, value: int) -> None:
        self.arena.write_atomic8(self.header, off, value, tag="header")
        self.arena.flush_line(self.header, off, tag="header")
        self.arena.fence()

    def set_count(self, count: int) -> None:
        self.__swing(HDR_COUNT, count)

    def set_sibling(self, offset: Offset) -> None:
        self.__swing(HDR_SIBLING, offset)
