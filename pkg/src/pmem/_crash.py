"""Crash image construction from the dirty state of an arena.

Classes:
    CrashPolicy
    CrashModel
    CrashImage

Functions:
    dropped_image(persistent: np.ndarray, cursor: int) -> CrashImage
    persisted_image(...) -> CrashImage
    random_image(...) -> CrashImage
    enumerate_images(...) -> Iterator[CrashImage]
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .errors import ArenaConfigError, CrashExplosionError

if TYPE_CHECKING:
    from collections.abc import Iterator

    from src.hinting import LineIndex, WordIndex


class CrashPolicy(Enum):
    """Which of the dirty words survive the power failure."""

    ALL_DROPPED = "all-dropped"
    ALL_PERSISTED = "all-persisted"
    RANDOM = "random"
    ENUMERATE = "enumerate"


class CrashModel(Enum):
    """Granularity at which unflushed stores may reach the media.

    LINE: a dirty line is written back as a unit at some moment, so it
        holds a program-order prefix of the stores issued to it since
        its last flush.
    WORD: every dirty 8-byte word persists or not independently.
    """

    LINE = "line"
    WORD = "word"


@dataclass(frozen=True)
class CrashImage:
    """One durable state reachable at a crash.

    Attributes:
        words (np.ndarray): The durable arena image, as 8-byte words.
        persisted_subset (frozenset[tuple[int, int]]): The (line, word)
            marks chosen from the dirty words at crash time.
        alloc_cursor (int): Allocator metadata at crash time.
    """

    words: np.ndarray = field(repr=False)
    persisted_subset: frozenset[tuple[LineIndex, WordIndex]]
    alloc_cursor: int

    @property
    def image_bytes(self) -> bytes:
        """The durable image as raw bytes."""
        return self.words.tobytes()


_Option = tuple[tuple[int, int], ...]


def _line_options(
    persistent: np.ndarray,
    stores: list[tuple[WordIndex, int]],
) -> list[_Option]:
    options: list[_Option] = []
    seen: set[tuple[tuple[int, int], ...]] = set()

    for p in range(len(stores) + 1):
        applied: dict[int, int] = {}
        for word, value in stores[:p]:
            applied[word] = value
        # Identical durable contents are one image
        outcome = tuple(sorted(
            (w, v) for w, v in applied.items() if int(persistent[w]) != v
        ))
        if outcome in seen:
            continue
        seen.add(outcome)
        options.append(tuple(sorted(applied.items())))

    return options

def _check_bound(dirty_words: set[WordIndex], max_dirty: int) -> None:
    if len(dirty_words) > max_dirty:
        logging.error(
            "%d dirty words exceed the enumeration bound of %d !",
            len(dirty_words), max_dirty,
        )
        raise CrashExplosionError

def _build(
    persistent: np.ndarray,
    picks: list[tuple[int, int]],
    words_per_line: int,
    cursor: int,
) -> CrashImage:
    words = persistent.copy()
    for word, value in picks:
        words[word] = value

    return CrashImage(
        words            = words,
        persisted_subset = frozenset(
            (word // words_per_line, word) for word, _ in picks
        ),
        alloc_cursor     = cursor,
    )

def _require_log(
    dirty_words: set[WordIndex],
    store_log: dict[LineIndex, list[tuple[WordIndex, int]]] | None,
    words_per_line: int,
) -> dict[LineIndex, list[tuple[WordIndex, int]]]:
    if store_log is None:
        logging.error("The line crash model needs the per-line store log !")
        raise ArenaConfigError
    lines = {w // words_per_line for w in dirty_words}
    return {line: store_log.get(line, []) for line in sorted(lines)}

def dropped_image(persistent: np.ndarray, cursor: int) -> CrashImage:
    """Returns the image where no dirty word reached the media."""
    return CrashImage(
        words            = persistent.copy(),
        persisted_subset = frozenset(),
        alloc_cursor     = cursor,
    )

def persisted_image(
    persistent: np.ndarray,
    shadow: np.ndarray,
    dirty_words: set[WordIndex],
    words_per_line: int,
    cursor: int,
) -> CrashImage:
    """Returns the image where every dirty word reached the media."""
    return _build(
        persistent,
        [(w, int(shadow[w])) for w in sorted(dirty_words)],
        words_per_line,
        cursor,
    )

def random_image(  # noqa: PLR0913
    persistent: np.ndarray,
    shadow: np.ndarray,
    dirty_words: set[WordIndex],
    store_log: dict[LineIndex, list[tuple[WordIndex, int]]] | None,
    words_per_line: int,
    cursor: int,
    seed: int,
    model: CrashModel,
) -> CrashImage:
    """Returns one image drawn with a seeded generator.

    Raises:
        ArenaConfigError: The line model is used without a store log.

    Returns:
        CrashImage: The drawn image, identical for identical seeds.
    """
    rng = np.random.default_rng(seed)

    if model is CrashModel.WORD:
        ordered = sorted(dirty_words)
        keep = rng.random(len(ordered)) < 0.5  # noqa: PLR2004
        picks = [
            (w, int(shadow[w]))
            for w, kept in zip(ordered, keep, strict=True) if kept
        ]
        return _build(persistent, picks, words_per_line, cursor)

    per_line = _require_log(dirty_words, store_log, words_per_line)
    picks = []
    for stores in per_line.values():
        options = _line_options(persistent, stores)
        picks.extend(options[int(rng.integers(len(options)))])

    return _build(persistent, picks, words_per_line, cursor)

def enumerate_images(  # noqa: PLR0913
    persistent: np.ndarray,
    shadow: np.ndarray,
    dirty_words: set[WordIndex],
    store_log: dict[LineIndex, list[tuple[WordIndex, int]]] | None,
    words_per_line: int,
    cursor: int,
    max_dirty: int,
    model: CrashModel,
) -> Iterator[CrashImage]:
    """Yields every distinct durable image of the dirty state.

    Args:
        persistent (np.ndarray): The durable words.
        shadow (np.ndarray): The volatile words.
        dirty_words (set[WordIndex]): Words not yet flushed.
        store_log (dict | None): Per dirty line, its stores in program
            order since the last flush of that line.
        words_per_line (int): Words in one cache line.
        cursor (int): Allocator cursor carried by every image.
        max_dirty (int): Bound on the dirty word count.
        model (CrashModel): Persistence granularity.

    Raises:
        CrashExplosionError: More dirty words than max_dirty.
        ArenaConfigError: The line model is used without a store log.

    Yields:
        CrashImage: One image per reachable durable state.
    """
    _check_bound(dirty_words, max_dirty)

    if model is CrashModel.WORD:
        ordered = sorted(dirty_words)
        for mask in itertools.product((False, True), repeat=len(ordered)):
            yield _build(
                persistent,
                [(w, int(shadow[w])) for w, on in zip(ordered, mask, strict=True) if on],
                words_per_line,
                cursor,
            )
        return

    per_line = _require_log(dirty_words, store_log, words_per_line)
    choices = [_line_options(persistent, stores) for stores in per_line.values()]
    for combo in itertools.product(*choices):
        yield _build(
            persistent,
            [pick for option in combo for pick in option],
            words_per_line,
            cursor,
        )
