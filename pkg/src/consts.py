"""All general constants for the project.

Constants:
    BASE_DIR: Path
    DEBUG: bool
    APPLICATION_VERSION: Tuple[int, int, int]
    MAX_ENUM_DIRTY: int
"""

from os import environ
from pathlib import Path

BASE_DIR = Path(__file__).parent.parent

DEBUG = environ.get("CIRC_DEBUG", "0") == "1"
APPLICATION_VERSION = 0, 1, 0

# Crash enumeration bound on distinct dirty words
MAX_ENUM_DIRTY = int(environ.get("BENCH_MAX_ENUM_DIRTY", "20"))
