"""All constants for the kv module.

Constants:
    FIELD_COUNT: int
    FIELD_SIZE: int
    RECORD_ALIGN: int
    KEY_PREFIX: str
"""

FIELD_COUNT = 10
FIELD_SIZE = 100
RECORD_ALIGN = 64

KEY_PREFIX = "user"
