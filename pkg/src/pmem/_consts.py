"""All constants for the pmem module.

Constants:
    WORD_SIZE: int
    DEFAULT_LINE_SIZE: int
    DEFAULT_FLUSH_LATENCY: int
    DEFAULT_CAPACITY: int
    EVENT_KINDS: tuple[str, ...]
    FLUSH_TAGS: tuple[str, ...]
"""

WORD_SIZE = 8

DEFAULT_LINE_SIZE = 64
DEFAULT_FLUSH_LATENCY = 300 # ns
DEFAULT_CAPACITY = 1 << 20

# Events that an armed crash can land on
EVENT_KINDS = ("store", "atomic", "flush", "fence")

FLUSH_TAGS = ("data", "header", "meta", "value")
