"""Block-granular file access with an optional simulated cache.

Every disk-resident part of both physical representations is read through a
BlockReader so a SimCache can observe exactly which blocks a query touches.
The cache is fill-then-LRU, counts hits and misses, and stores block bytes so
hits never reach the file.  It is deterministic: identical access sequences
produce identical counters and resident sets.
"""

from __future__ import annotations

import os
import threading
from collections import OrderedDict
from pathlib import Path
from typing import Callable


class SimCache:
    """Fill-then-LRU block cache, accounted in actual resident bytes.

    Readers with different block sizes may share one cache; each resident
    entry is charged its true length, so a short tail block costs what it is.
    A lock keeps concurrent lookups safe; experiments stay single-threaded
    for determinism, but stores themselves may be probed from many threads.
    """

    def __init__(self, capacity: int, block_size: int = 4096):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self.block_size = block_size  # default unit handed to readers
        self.hits = 0
        self.misses = 0
        self._resident: OrderedDict[tuple[str, int], bytes] = OrderedDict()
        self._used = 0
        self._lock = threading.Lock()

    @property
    def resident_blocks(self) -> int:
        return len(self._resident)

    @property
    def used_bytes(self) -> int:
        return self._used

    def set_capacity(self, capacity: int) -> None:
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        with self._lock:
            self.capacity = capacity
            self._evict()

    def clear(self) -> None:
        with self._lock:
            self._resident.clear()
            self._used = 0

    def reset_counters(self) -> None:
        self.hits = 0
        self.misses = 0

    def _evict(self) -> None:
        while self._used > self.capacity:
            _, dropped = self._resident.popitem(last=False)
            self._used -= len(dropped)

    def access(self, key: tuple[str, int], loader: Callable[[], bytes]) -> bytes:
        with self._lock:
            cached = self._resident.get(key)
            if cached is not None:
                self.hits += 1
                self._resident.move_to_end(key)
                return cached
            self.misses += 1
        data = loader()
        with self._lock:
            if self.capacity >= len(data) and key not in self._resident:
                self._resident[key] = data
                self._used += len(data)
                self._evict()
        return data


class BlockReader:
    """Reads byte ranges from a file in fixed-size blocks."""

    def __init__(
        self,
        path: str | Path,
        block_size: int = 4096,
        cache: SimCache | None = None,
        name: str | None = None,
    ):
        self.path = str(path)
        self.block_size = block_size
        self.cache = cache
        self.name = name if name is not None else self.path
        self._fd = os.open(self.path, os.O_RDONLY)
        self.file_size = os.fstat(self._fd).st_size

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def block_count(self) -> int:
        return (self.file_size + self.block_size - 1) // self.block_size

    def _load_block(self, block_no: int) -> bytes:
        return os.pread(self._fd, self.block_size, block_no * self.block_size)

    def read_block(self, block_no: int) -> bytes:
        if self.cache is None:
            return self._load_block(block_no)
        return self.cache.access(
            (self.name, block_no), lambda: self._load_block(block_no)
        )

    def read_at(self, offset: int, length: int) -> bytes:
        if length <= 0:
            return b""
        if offset + length > self.file_size:
            raise ValueError(
                f"read [{offset}, {offset + length}) beyond file of {self.file_size} bytes"
            )
        bs = self.block_size
        first = offset // bs
        last = (offset + length - 1) // bs
        if first == last:
            block = self.read_block(first)
            start = offset - first * bs
            return block[start : start + length]
        parts = []
        for bno in range(first, last + 1):
            block = self.read_block(bno)
            lo = offset - bno * bs if bno == first else 0
            hi = offset + length - bno * bs if bno == last else bs
            parts.append(block[lo:hi])
        return b"".join(parts)
