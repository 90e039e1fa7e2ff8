"""Key-value store keeping 1000-byte records behind any of the trees."""

from .store import KvStore, StoreStats, ValueRecord, parse_ycsb_key

__all__ = [
    "KvStore",
    "StoreStats",
    "ValueRecord",
    "parse_ycsb_key",
]
