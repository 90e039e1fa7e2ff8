"""Simulated byte-addressable persistent memory.

The arena keeps two images of the same address space. Stores land in
the shadow image (the CPU caches) and only reach the persistent image
(the media) through `flush_line`. Words stored but not flushed are
dirty, and a crash decides which of them survive.

Classes:
    Handle
    Event
    ArenaStats
    ArenaSnapshot
    PmArena
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from src.consts import MAX_ENUM_DIRTY

from ._consts import (
    DEFAULT_CAPACITY,
    DEFAULT_FLUSH_LATENCY,
    DEFAULT_LINE_SIZE,
    WORD_SIZE,
)
from ._crash import (
    CrashImage,
    CrashModel,
    CrashPolicy,
    dropped_image,
    enumerate_images,
    persisted_image,
    random_image,
)
from .errors import (
    AlignmentError,
    AllocationError,
    ArenaConfigError,
    ArenaRangeError,
    SimulatedCrash,
)

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from src.hinting import LineIndex, Offset, WordIndex


@dataclass(frozen=True, slots=True)
class Handle:
    """A region of the arena returned by `PmArena.alloc`."""

    offset: Offset
    size: int


@dataclass(frozen=True, slots=True)
class Event:
    """One persistence event, in program order."""

    index: int
    kind: str
    line: LineIndex
    tag: str = "data"
    word: WordIndex | None = None


@dataclass
class ArenaStats:
    """Read-only snapshot of the arena counters."""

    flush_count: int = 0
    fence_count: int = 0
    bytes_flushed: int = 0
    virtual_clock: int = 0
    shift_count: int = 0
    store_count: int = 0
    flushes_by_tag: dict[str, int] = field(default_factory=dict)


@dataclass
class ArenaSnapshot:
    """Everything needed to rewind an arena to an earlier moment."""

    shadow: np.ndarray = field(repr=False)
    persistent: np.ndarray = field(repr=False)
    dirty: dict[LineIndex, set[WordIndex]]
    store_log: dict[LineIndex, list[tuple[WordIndex, int]]]
    cursor: int
    stats: ArenaStats
    event_count: int
    events: list[Event]


def _is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


class PmArena:  # pylint: disable=too-many-instance-attributes,too-many-public-methods
    """Word-addressed persistent memory with cache-line flush semantics.

    Every mutation runs under one re-entrant lock, so the arena may be
    shared across threads. Crash enumeration is meant for a single
    thread.
    """

    def __init__(  # noqa: PLR0913
        self,
        capacity: int = DEFAULT_CAPACITY,
        line_size: int = DEFAULT_LINE_SIZE,
        flush_latency: int = DEFAULT_FLUSH_LATENCY,
        *,
        op_cost: int = 0,
        shift_cost: int = 0,
        track_stores: bool = True,
        log_events: bool = True,
        max_dirty: int = MAX_ENUM_DIRTY,
    ) -> None:
        """Creates a zeroed arena.

        Args:
            capacity (int): Size of the address space in bytes.
            line_size (int): Cache line size in bytes.
            flush_latency (int): Virtual nanoseconds charged per flush.
            op_cost (int): Virtual nanoseconds charged by `charge_op`.
            shift_cost (int): Virtual nanoseconds charged per pair moved
                by a shift.
            track_stores (bool): Keep the per-line store log needed by
                the line crash model.
            log_events (bool): Keep every event in `events`.
            max_dirty (int): Enumeration bound on dirty words.

        Raises:
            ArenaConfigError: Bad line size or capacity.
        """
        if not _is_power_of_two(line_size) or line_size < WORD_SIZE:
            logging.error("Line size %d is not a power of two >= 8 !", line_size)
            raise ArenaConfigError
        if capacity <= 0 or capacity % line_size:
            logging.error("Capacity %d is not a multiple of the line size !", capacity)
            raise ArenaConfigError

        self.__capacity = capacity
        self.__line_size = line_size
        self.__words_per_line = line_size // WORD_SIZE
        self.__flush_latency = flush_latency
        self.__op_cost = op_cost
        self.__shift_cost = shift_cost
        self.__track_stores = track_stores
        self.__log_events = log_events
        self.__max_dirty = max_dirty

        self.__shadow = np.zeros(capacity // WORD_SIZE, dtype=np.uint64)
        self.__persistent = np.zeros(capacity // WORD_SIZE, dtype=np.uint64)

        self.__dirty: dict[LineIndex, set[WordIndex]] = {}
        self.__store_log: dict[LineIndex, list[tuple[WordIndex, int]]] = {}
        self.__cursor = 0

        self.__stats = ArenaStats()
        self.__event_count = 0
        self.__events: list[Event] = []
        self.__crash_at: int | None = None

        self.__mutex = threading.RLock()
        self.__local = threading.local()

        logging.debug(
            "Created arena of %d bytes with %dB lines",
            capacity, line_size,
        )

    # ------------------------------------------------------------------ geometry

    @property
    def capacity(self) -> int:
        return self.__capacity

    @property
    def line_size(self) -> int:
        return self.__line_size

    @property
    def words_per_line(self) -> int:
        return self.__words_per_line

    @property
    def flush_latency(self) -> int:
        return self.__flush_latency

    @property
    def alloc_cursor(self) -> int:
        return self.__cursor

    @property
    def dirty_words(self) -> frozenset[tuple[LineIndex, WordIndex]]:
        """Every (line, word) mark stored but not flushed yet."""
        return frozenset(
            (line, word)
            for line, words in self.__dirty.items()
            for word in words
        )

    @property
    def events(self) -> list[Event]:
        return self.__events

    @property
    def event_count(self) -> int:
        """Persistence events issued so far, logged or not."""
        return self.__event_count

    def line_of(self, h: Handle, off: int) -> LineIndex:
        return (h.offset + off) // self.__line_size

    def is_line_start(self, h: Handle, off: int) -> bool:
        return (h.offset + off) % self.__line_size == 0

    # ---------------------------------------------------------------- allocation

    def alloc(self, size: int, align: int | None = None) -> Handle:
        """Bump allocates a zero shredded region.

        The region is zero in both images, so it reads as zero in every
        crash image until first written.

        Args:
            size (int): Bytes to allocate.
            align (int | None): Power of two alignment, defaults to the
                line size.

        Raises:
            ArenaConfigError: Bad size or alignment.
            AllocationError: The arena is out of space.

        Returns:
            Handle: The fresh region.
        """
        align = self.__line_size if align is None else align
        if size <= 0 or not _is_power_of_two(align):
            logging.error("Bad allocation request of %d bytes aligned on %d !", size, align)
            raise ArenaConfigError

        with self.__mutex:
            start = -(-self.__cursor // align) * align
            end = start + size
            if end > self.__capacity:
                logging.error(
                    "Out of space: %d bytes requested, %d left !",
                    size, self.__capacity - self.__cursor,
                )
                raise AllocationError

            # Word granularity keeps regions disjoint word-wise
            self.__cursor = -(-end // WORD_SIZE) * WORD_SIZE
            lo, hi = start // WORD_SIZE, self.__cursor // WORD_SIZE
            self.__shadow[lo:hi] = 0
            self.__persistent[lo:hi] = 0

        return Handle(start, size)

    # -------------------------------------------------------------------- checks

    def __span(self, h: Handle, off: int, size: int) -> int:
        if (
            off < 0 or size < 0 or off + size > h.size
            or h.offset < 0 or h.offset + h.size > self.__capacity
        ):
            logging.error(
                "Access [%d, %d) is outside handle %s !",
                off, off + size, h,
            )
            raise ArenaRangeError
        return h.offset + off

    def __word(self, h: Handle, off: int) -> WordIndex:
        address = self.__span(h, off, WORD_SIZE)
        if address % WORD_SIZE:
            logging.error("Offset %d is not 8 bytes aligned !", address)
            raise AlignmentError
        return address // WORD_SIZE

    # -------------------------------------------------------------------- events

    def __admit(self, count: int = 1) -> int:
        """Returns how many of count events may run before the crash."""
        if self.__crash_at is None:
            return count
        return max(0, min(count, self.__crash_at - self.__event_count))

    def __fire(self) -> None:
        logging.debug("Simulated crash at event %d", self.__event_count)
        self.__crash_at = None
        raise SimulatedCrash

    def __record(self, kind: str, line: LineIndex, tag: str, word: WordIndex | None) -> None:
        if self.__log_events:
            self.__events.append(Event(self.__event_count, kind, line, tag, word))
        self.__event_count += 1

    def arm_crash(self, event_index: int | None) -> None:
        """Crash right before the given event index, None disarms."""
        self.__crash_at = event_index

    # -------------------------------------------------------------------- stores

    def __store(self, word: WordIndex, value: int, kind: str, tag: str) -> None:
        line = word // self.__words_per_line
        self.__shadow[word] = value
        self.__dirty.setdefault(line, set()).add(word)
        if self.__track_stores:
            self.__store_log.setdefault(line, []).append((word, value))
        self.__stats.store_count += 1
        self.__record(kind, line, tag, word)

    def store_sequence(
        self,
        h: Handle,
        items: Sequence[tuple[int, int]],
        tag: str = "data",
    ) -> None:
        """Issues plain 8-byte stores in the given order.

        Args:
            h (Handle): Region written.
            items (Sequence[tuple[int, int]]): (offset, value) pairs,
                offsets 8 bytes aligned.
            tag (str): Event tag.

        Raises:
            SimulatedCrash: An armed crash landed inside the sequence.
        """
        words = [self.__word(h, off) for off, _ in items]
        with self.__mutex:
            allowed = self.__admit(len(items))
            for word, (_, value) in zip(words[:allowed], items[:allowed], strict=True):
                self.__store(word, int(value), "store", tag)
            if allowed < len(items):
                self.__fire()

    def write_word(self, h: Handle, off: int, value: int, tag: str = "data") -> None:
        """Plain 8-byte store."""
        self.store_sequence(h, ((off, value),), tag)

    def write_atomic8(self, h: Handle, off: int, value: int, tag: str = "header") -> None:
        """8-byte atomic store, dirty as exactly one word.

        Raises:
            AlignmentError: off is not 8 bytes aligned.
            SimulatedCrash: An armed crash landed on this store.
        """
        word = self.__word(h, off)
        with self.__mutex:
            if not self.__admit():
                self.__fire()
            self.__store(word, int(value), "atomic", tag)

    def write(self, h: Handle, off: int, data: bytes, tag: str = "data") -> None:
        """Byte store, every touched word becomes dirty.

        Raises:
            ArenaRangeError: The write leaves the handle.
        """
        address = self.__span(h, off, len(data))
        if not data:
            return

        lo = address // WORD_SIZE
        hi = (address + len(data) - 1) // WORD_SIZE + 1
        with self.__mutex:
            words = self.__shadow[lo:hi].copy()
            start = address - lo * WORD_SIZE
            words.view(np.uint8)[start:start + len(data)] = np.frombuffer(data, dtype=np.uint8)
            allowed = self.__admit(hi - lo)
            for i in range(allowed):
                self.__store(lo + i, int(words[i]), "store", tag)
            if allowed < hi - lo:
                self.__fire()

    def store_volatile(self, h: Handle, off: int, value: int) -> None:
        """Writes a word that carries no durability, like a lock word.

        Both images get the value and nothing becomes dirty.
        """
        word = self.__word(h, off)
        with self.__mutex:
            self.__shadow[word] = value
            self.__persistent[word] = value

    # --------------------------------------------------------------------- reads

    def read(self, h: Handle, off: int, size: int) -> bytes:
        address = self.__span(h, off, size)
        return self.__shadow.view(np.uint8)[address:address + size].tobytes()

    def read_word(self, h: Handle, off: int) -> int:
        return int(self.__shadow[self.__word(h, off)])

    def read_words(self, h: Handle, off: int, count: int) -> np.ndarray:
        """Copy of count consecutive words of the shadow image."""
        address = self.__span(h, off, count * WORD_SIZE)
        lo = address // WORD_SIZE
        return self.__shadow[lo:lo + count].copy()

    def persistent_words(self) -> np.ndarray:
        return self.__persistent.copy()

    def shadow_words(self) -> np.ndarray:
        return self.__shadow.copy()

    # ------------------------------------------------------------------- persist

    def flush_line(self, h: Handle, off: int, tag: str = "data") -> None:
        """Writes back the cache line holding h+off.

        The counters move even when the line is clean.

        Raises:
            ArenaRangeError: off is outside the handle.
            SimulatedCrash: An armed crash landed on this flush.
        """
        line = self.__span(h, off, 1) // self.__line_size
        with self.__mutex:
            if not self.__admit():
                self.__fire()

            lo = line * self.__words_per_line
            hi = lo + self.__words_per_line
            self.__persistent[lo:hi] = self.__shadow[lo:hi]
            self.__dirty.pop(line, None)
            self.__store_log.pop(line, None)

            self.__stats.flush_count += 1
            self.__stats.bytes_flushed += self.__line_size
            self.__stats.flushes_by_tag[tag] = self.__stats.flushes_by_tag.get(tag, 0) + 1
            self.__advance(self.__flush_latency)
            self.__record("flush", line, tag, None)

    def flush_range(self, h: Handle, off: int, size: int, tag: str = "data") -> None:
        """Flushes every line overlapping [off, off+size) once."""
        first = self.line_of(h, off)
        last = self.line_of(h, off + size - 1)
        for line in range(first, last + 1):
            self.flush_line(h, max(off, line * self.__line_size - h.offset), tag)

    def fence(self) -> None:
        """Ordering point, flushed lines are already durable."""
        with self.__mutex:
            if not self.__admit():
                self.__fire()
            self.__stats.fence_count += 1
            self.__record("fence", -1, "data", None)

    # ------------------------------------------------------------------ counters

    def __advance(self, ns: int) -> None:
        self.__stats.virtual_clock += ns
        self.__local.clock = getattr(self.__local, "clock", 0) + ns

    def charge(self, ns: int) -> None:
        """Adds ns to the virtual clocks."""
        with self.__mutex:
            self.__advance(ns)

    def charge_op(self) -> None:
        """Adds the fixed per-operation cost."""
        if self.__op_cost:
            self.charge(self.__op_cost)

    def thread_clock(self) -> int:
        """Virtual nanoseconds spent by the calling thread."""
        return getattr(self.__local, "clock", 0)

    def count_shifts(self, n: int) -> None:
        if n:
            with self.__mutex:
                self.__stats.shift_count += n
                self.__advance(n * self.__shift_cost)

    def stats(self) -> ArenaStats:
        with self.__mutex:
            return ArenaStats(
                flush_count    = self.__stats.flush_count,
                fence_count    = self.__stats.fence_count,
                bytes_flushed  = self.__stats.bytes_flushed,
                virtual_clock  = self.__stats.virtual_clock,
                shift_count    = self.__stats.shift_count,
                store_count    = self.__stats.store_count,
                flushes_by_tag = dict(self.__stats.flushes_by_tag),
            )

    # -------------------------------------------------------------------- crash

    def __dirty_set(self) -> set[WordIndex]:
        return {w for words in self.__dirty.values() for w in words}

    def __log(self) -> dict[LineIndex, list[tuple[WordIndex, int]]] | None:
        return self.__store_log if self.__track_stores else None

    def crash(
        self,
        policy: CrashPolicy = CrashPolicy.ALL_DROPPED,
        *,
        seed: int = 0,
        model: CrashModel = CrashModel.WORD,
    ) -> CrashImage | list[CrashImage]:
        """Builds the durable state(s) reachable if power failed now.

        Args:
            policy (CrashPolicy): Which dirty words survive.
            seed (int): Seed of the RANDOM policy.
            model (CrashModel): Persistence granularity.

        Raises:
            CrashExplosionError: ENUMERATE over too many dirty words.

        Returns:
            CrashImage | list[CrashImage]: A list for ENUMERATE, a
                single image otherwise.
        """
        with self.__mutex:
            if policy is CrashPolicy.ENUMERATE:
                return list(self.iter_crashes(model))
            if policy is CrashPolicy.ALL_DROPPED:
                return dropped_image(self.__persistent, self.__cursor)
            if policy is CrashPolicy.ALL_PERSISTED:
                return persisted_image(
                    self.__persistent, self.__shadow, self.__dirty_set(),
                    self.__words_per_line, self.__cursor,
                )
            return random_image(
                self.__persistent, self.__shadow, self.__dirty_set(), self.__log(),
                self.__words_per_line, self.__cursor, seed, model,
            )

    def iter_crashes(self, model: CrashModel = CrashModel.WORD) -> Iterator[CrashImage]:
        """Lazily yields every distinct crash image of the current state."""
        return enumerate_images(
            persistent     = self.__persistent,
            shadow         = self.__shadow,
            dirty_words    = self.__dirty_set(),
            store_log      = self.__log(),
            words_per_line = self.__words_per_line,
            cursor         = self.__cursor,
            max_dirty      = self.__max_dirty,
            model          = model,
        )

    def dirty_count(self) -> int:
        return sum(len(words) for words in self.__dirty.values())

    # ----------------------------------------------------------------- forking

    def snapshot(self) -> ArenaSnapshot:
        with self.__mutex:
            return ArenaSnapshot(
                shadow      = self.__shadow.copy(),
                persistent  = self.__persistent.copy(),
                dirty       = {line: set(words) for line, words in self.__dirty.items()},
                store_log   = {line: list(log) for line, log in self.__store_log.items()},
                cursor      = self.__cursor,
                stats       = self.stats(),
                event_count = self.__event_count,
                events      = list(self.__events),
            )

    def restore(self, snap: ArenaSnapshot) -> None:
        with self.__mutex:
            self.__shadow = snap.shadow.copy()
            self.__persistent = snap.persistent.copy()
            self.__dirty = {line: set(words) for line, words in snap.dirty.items()}
            self.__store_log = {line: list(log) for line, log in snap.store_log.items()}
            self.__cursor = snap.cursor
            self.__stats = ArenaStats(
                flush_count    = snap.stats.flush_count,
                fence_count    = snap.stats.fence_count,
                bytes_flushed  = snap.stats.bytes_flushed,
                virtual_clock  = snap.stats.virtual_clock,
                shift_count    = snap.stats.shift_count,
                store_count    = snap.stats.store_count,
                flushes_by_tag = dict(snap.stats.flushes_by_tag),
            )
            self.__event_count = snap.event_count
            self.__events = list(snap.events)
            self.__crash_at = None

    @classmethod
    def from_image(
        cls,
        image: CrashImage,
        line_size: int = DEFAULT_LINE_SIZE,
        flush_latency: int = DEFAULT_FLUSH_LATENCY,
        **kwargs: object,
    ) -> PmArena:
        """Re-opens memory after a crash, shadow equal to the image."""
        arena = cls(
            capacity      = len(image.words) * WORD_SIZE,
            line_size     = line_size,
            flush_latency = flush_latency,
            **kwargs,  # type: ignore[arg-type]
        )
        arena.__load(image)  # pylint: disable=protected-access
        return arena

    def __load(self, image: CrashImage) -> None:
        self.__shadow[:] = image.words
        self.__persistent[:] = image.words
        self.__cursor = image.alloc_cursor
