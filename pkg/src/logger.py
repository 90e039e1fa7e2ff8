"""Logger setup for the command line and the tests.

Worker threads of a run log under their pool name, so the thread is
shown next to the level. Colors are only used on a terminal.

Functions:
    setup_logger(verbosity: int | None = None)
"""

from __future__ import annotations

import sys
from logging import DEBUG as LOG_DEBUG
from logging import (
    ERROR,
    INFO,
    WARNING,
    Formatter,
    LogRecord,
    StreamHandler,
    basicConfig,
)
from typing import ClassVar

from src.consts import DEBUG


class _BenchFormatter(Formatter):
    """Level, thread and message, colored by level when asked to."""

    line_format = "%(levelname)-7s %(threadName)s: %(message)s"

    colors: ClassVar[dict[int, int]] = {
        LOG_DEBUG: 37, # White
        INFO:      34, # Blue
        WARNING:   33, # Yellow
        ERROR:     31, # Red
    }

    def __init__(self, *, colored: bool) -> None:
        super().__init__(self.line_format)
        self.__colored = colored

    def format(self, record: LogRecord) -> str:  # noqa: A003
        line = super().format(record)
        if not self.__colored:
            return line
        return f"\033[{self.colors.get(record.levelno, 0)}m{line}\033[0m"

def _level_for(verbosity: int | None) -> int:
    if verbosity is None:
        return LOG_DEBUG if DEBUG else INFO
    if verbosity <= 0:
        return WARNING
    if verbosity == 1:
        return INFO
    return LOG_DEBUG

def setup_logger(verbosity: int | None = None) -> None:
    """Routes every log line to stderr.

    Args:
        verbosity (int | None): 0 shows warnings only, 1 adds info
            lines, 2 and more adds debug lines. None follows DEBUG.
    """
    handler = StreamHandler(sys.stderr)
    handler.setFormatter(_BenchFormatter(colored=sys.stderr.isatty()))

    basicConfig(
        level    = _level_for(verbosity),
        handlers = [handler],
        force    = True,
    )
