"""All constants for the baselines module.

Constants:
    HEADER_BYTES: int
    ENTRY_SIZE: int
    ENTRY_WORDS: int
    FLAG_BITS: int
    SEAL_MASK: int
    FLAG_INSERT: int
    FLAG_DELETE: int
"""

HEADER_BYTES = 32

# flag, key, value and one padding word
ENTRY_SIZE = 32
ENTRY_WORDS = 4

# The flag word is the seal shifted above the flag
FLAG_BITS = 2
SEAL_MASK = (1 << 62) - 1

FLAG_INSERT = 1
FLAG_DELETE = 2
