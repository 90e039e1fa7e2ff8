"""The main file.

If this file is executed, the command line is parsed, the logger is
setup, then the requested benchmark runs.

Classes:
    CircBench()
"""

from __future__ import annotations

import sys
from typing import TYPE_CHECKING

from src.bench.cli import build_parser, dispatch
from src.logger import setup_logger

if TYPE_CHECKING:
    from collections.abc import Sequence


class CircBench:
    """The main class of the project.

    Methods:
        run() -> int
    """

    def __init__(self, argv: Sequence[str] | None = None) -> None:
        self.__args = build_parser().parse_args(argv)
        setup_logger(self.__args.verbose)

    def run(self) -> int:
        """Runs the sub-command and returns the exit code."""
        return dispatch(self.__args)

if __name__ == "__main__":
    app = CircBench()
    sys.exit(app.run())
