"""Report writers.

Functions:
    write_json(payload: object, path: Path) -> None
    write_csv(rows: Sequence[dict[str, object]], path: Path) -> None
"""

from __future__ import annotations

import csv
import json
import logging
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path


def write_json(payload: object, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logging.info("Wrote %s", path)

def write_csv(rows: Sequence[dict[str, object]], path: Path) -> None:
    """One line per row, columns in first-seen order."""
    columns: list[str] = []
    for row in rows:
        columns.extend(name for name in row if name not in columns)

    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    logging.info("Wrote %d rows to %s", len(rows), path)
