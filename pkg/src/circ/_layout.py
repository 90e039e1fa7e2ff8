"""Durable bit layout of node headers and of the tree superblock.

Header words, 8 bytes each, 32 bytes in all:
    0 array offset, 1 base (high 4B) and nkeys (low 4B), 2 lock,
    3 right sibling.

Info words, in the cache line right before the pair array:
    0 leftmost child, 1 level (0 for leaves), 2 low fence key.

Superblock words, at arena offset 0:
    0 magic, 1 start flag, 2 root, 3 leftmost leaf, 4 node capacity,
    5 height.

Classes:
    Superblock

Functions:
    pack_bn(base: int, nkeys: int) -> int
    unpack_bn(word: int) -> tuple[int, int]
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

from src.pmem import Handle

from ._consts import SUPERBLOCK_BYTES, SUPERBLOCK_MAGIC
from .errors import ContractError, CorruptionError

if TYPE_CHECKING:
    from src.hinting import Offset
    from src.pmem import PmArena

HDR_ARRAY = 0
HDR_BN = 8
HDR_LOCK = 16
HDR_SIBLING = 24
INFO_LEFTMOST = 0
INFO_LEVEL = 8
INFO_FENCE = 16

SB_MAGIC = 0
SB_FLAG = 8
SB_ROOT = 16
SB_LEAF_HEAD = 24
SB_CAPACITY = 32
SB_HEIGHT = 40

_LOW_MASK = 0xFFFF_FFFF


def pack_bn(base: int, nkeys: int) -> int:
    return (base << 32) | nkeys

def unpack_bn(word: int) -> tuple[int, int]:
    return word >> 32, word & _LOW_MASK


class Superblock:
    """The root area of a tree, always the first allocation of its arena."""

    def __init__(self, arena: PmArena) -> None:
        self.__arena = arena
        self.handle = Handle(0, SUPERBLOCK_BYTES)

    @classmethod
    def create(cls, arena: PmArena, capacity: int) -> Superblock:
        """Allocates and formats the superblock, not yet persisted.

        Raises:
            ContractError: The arena already holds allocations.
        """
        if arena.alloc_cursor != 0:
            logging.error("The superblock must be the first allocation !")
            raise ContractError

        handle = arena.alloc(SUPERBLOCK_BYTES)
        arena.write_word(handle, SB_MAGIC, SUPERBLOCK_MAGIC, tag="meta")
        arena.write_word(handle, SB_CAPACITY, capacity, tag="meta")
        return cls(arena)

    def check(self) -> None:
        """Raises CorruptionError unless the magic word is present."""
        if self.__arena.read_word(self.handle, SB_MAGIC) != SUPERBLOCK_MAGIC:
            logging.error("No tree superblock at offset 0 !")
            raise CorruptionError

    def persist(self) -> None:
        self.__arena.flush_range(self.handle, 0, SUPERBLOCK_BYTES, tag="meta")
        self.__arena.fence()

    def __swing(self, off: int, value: int) -> None:
        self.__arena.write_atomic8(self.handle, off, value, tag="meta")
        self.__arena.flush_line(self.handle, off, tag="meta")
        self.__arena.fence()

    @property
    def start_flag(self) -> bool:
        return self.__arena.read_word(self.handle, SB_FLAG) != 0

    @start_flag.setter
    def start_flag(self, on: bool) -> None:
        self.__swing(SB_FLAG, int(on))

    @property
    def root(self) -> Offset:
        return self.__arena.read_word(self.handle, SB_ROOT)

    @root.setter
    def root(self, offset: Offset) -> None:
        self.__swing(SB_ROOT, offset)

    @property
    def leaf_head(self) -> Offset:
        return self.__arena.read_word(self.handle, SB_LEAF_HEAD)

    @leaf_head.setter
    def leaf_head(self, offset: Offset) -> None:
        self.__swing(SB_LEAF_HEAD, offset)

    @property
    def capacity(self) -> int:
        return self.__arena.read_word(self.handle, SB_CAPACITY)

    @property
    def height(self) -> int:
        return self.__arena.read_word(self.handle, SB_HEIGHT)

    @height.setter
    def height(self, levels: int) -> None:
        self.__swing(SB_HEIGHT, levels)
