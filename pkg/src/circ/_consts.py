"""All constants for the circ module.

Constants:
    PAIR_SIZE: int
    HEADER_BYTES: int
    SUPERBLOCK_BYTES: int
    INFO_BYTES: int
    MIN_CAPACITY: int
    SUPERBLOCK_MAGIC: int
    NULL: int
"""

PAIR_SIZE = 16 # key word then value word

# Array, base/nkeys, lock and sibling words
HEADER_BYTES = 32

# Leftmost child, level and low fence key, in the line before the array
INFO_BYTES = 24

SUPERBLOCK_BYTES = 64

MIN_CAPACITY = 8

SUPERBLOCK_MAGIC = 0x43_49_52_43_54_52_45_45 # "CIRCTREE"

NULL = 0
