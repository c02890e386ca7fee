"""Run-pair (SCHC), position-list (LPC) and base+offset (BOC) headers.

Each header translates a logical position into a physical position in the
compressed cell array, or reports the cell as empty.  All sequences are
sorted by construction, so every lookup is a binary search.

The serialized layout is shared by every header type: a 4-octet magic tag,
one version octet, a parameter block of 8-octet little-endian integers, then
the sequences packed contiguously at their configured entry widths.
`size_bytes()` reports the size of the structure itself (the quantity the
size comparisons reason about); serialized files add the small envelope.
"""

from __future__ import annotations

import struct
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidPositionError, OffsetOverflowError

VERSION = 1

_MAGIC_SCHC = b"SCHC"
_MAGIC_LPC = b"LPCH"
_MAGIC_BOC = b"BOCH"


def _pack_ints(values, width: int) -> bytes:
    if width == 8:
        return np.asarray(values, dtype="<u8").tobytes()
    return b"".join(int(v).to_bytes(width, "little") for v in values)


def _unpack_ints(data: bytes, width: int, count: int, offset: int = 0) -> list[int]:
    end = offset + width * count
    if end > len(data):
        raise FormatError("truncated header payload")
    if width == 8:
        return np.frombuffer(data, dtype="<u8", count=count, offset=offset).tolist()
    return [
        int.from_bytes(data[offset + i * width : offset + (i + 1) * width], "little")
        for i in range(count)
    ]


def _check_positions(positions) -> np.ndarray:
    arr = np.asarray(positions, dtype=np.uint64)
    if arr.size == 0:
        raise ValueError("position sequence is empty")
    if arr.size > 1 and not (np.diff(arr) > 0).all():
        raise ValueError("position sequence must be strictly increasing")
    return arr


def _read_envelope(data: bytes, magic: bytes, n_params: int) -> list[int]:
    if len(data) < 5 + 8 * n_params:
        raise FormatError("header file too short")
    if data[:4] != magic:
        raise FormatError(f"bad magic {data[:4]!r}, expected {magic!r}")
    if data[4] != VERSION:
        raise FormatError(f"unsupported header version {data[4]}")
    return list(struct.unpack_from(f"<{n_params}Q", data, 5))


@dataclass
class SchcHeader:
    """One (last position, cumulative empty count) pair per run of nonempty cells."""

    run_ends: list[int]
    empty_counts: list[int]
    entry_width: int = 8

    @property
    def num_runs(self) -> int:
        return len(self.run_ends)

    def size_bytes(self) -> int:
        return 2 * self.num_runs * self.entry_width

    def memory_bytes(self) -> int:
        return self.size_bytes()

    def lookup(self, position: int) -> int | None:
        j = bisect_left(self.run_ends, position)
        if j == self.num_runs:
            return None
        prev_end = self.run_ends[j - 1] if j > 0 else -1
        prev_empty = self.empty_counts[j - 1] if j > 0 else 0
        # Nonempty iff position lies past the empty prefix of run j.
        if position <= prev_end + (self.empty_counts[j] - prev_empty):
            return None
        return position - self.empty_counts[j]

    def positions(self) -> list[int]:
        out: list[int] = []
        prev_end, prev_empty = -1, 0
        for end, empty in zip(self.run_ends, self.empty_counts):
            start = prev_end + (empty - prev_empty) + 1
            out.extend(range(start, end + 1))
            prev_end, prev_empty = end, empty
        return out

    def to_bytes(self) -> bytes:
        pairs = []
        for end, empty in zip(self.run_ends, self.empty_counts):
            pairs.append(end)
            pairs.append(empty)
        head = _MAGIC_SCHC + bytes([VERSION])
        head += struct.pack("<QQ", self.entry_width, self.num_runs)
        return head + _pack_ints(pairs, self.entry_width)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SchcHeader":
        entry_width, num_runs = _read_envelope(data, _MAGIC_SCHC, 2)
        flat = _unpack_ints(data, entry_width, 2 * num_runs, offset=21)
        return cls(flat[0::2], flat[1::2], entry_width)


def build_schc(positions, total_cells: int, entry_width: int = 8) -> SchcHeader:
    arr = _check_positions(positions)
    if int(arr[-1]) >= total_cells:
        raise InvalidPositionError(
            f"position {int(arr[-1])} >= total cell count {total_cells}"
        )
    run_break = np.diff(arr) > 1
    end_mask = np.append(run_break, True)
    ends = arr[end_mask]
    end_idx = np.flatnonzero(end_mask).astype(np.uint64)
    empties = ends - end_idx  # end+1 minus nonempty count (idx+1) up to the end
    return SchcHeader(ends.tolist(), empties.tolist(), entry_width)


def lookup_schc(header: SchcHeader, position: int) -> int | None:
    return header.lookup(position)


@dataclass
class LpcHeader:
    """The full sequence of nonempty logical positions, stored verbatim."""

    positions_list: list[int]
    entry_width: int = 8

    @property
    def count(self) -> int:
        return len(self.positions_list)

    def size_bytes(self) -> int:
        return self.count * self.entry_width

    def memory_bytes(self) -> int:
        return self.size_bytes()

    def lookup(self, position: int) -> int | None:
        j = bisect_left(self.positions_list, position)
        if j < self.count and self.positions_list[j] == position:
            return j
        return None

    def positions(self) -> list[int]:
        return list(self.positions_list)

    def to_bytes(self) -> bytes:
        head = _MAGIC_LPC + bytes([VERSION])
        head += struct.pack("<QQ", self.entry_width, self.count)
        return head + _pack_ints(self.positions_list, self.entry_width)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LpcHeader":
        entry_width, count = _read_envelope(data, _MAGIC_LPC, 2)
        return cls(_unpack_ints(data, entry_width, count, offset=21), entry_width)


def build_lpc(positions, entry_width: int = 8) -> LpcHeader:
    arr = _check_positions(positions)
    return LpcHeader(arr.tolist(), entry_width)


def lookup_lpc(header: LpcHeader, position: int) -> int | None:
    return header.lookup(position)


@dataclass
class BocHeader:
    """Block bases plus narrow per-position offsets."""

    bases: list[int]
    offsets: list[int]
    block_len: int
    entry_width: int = 8
    offset_width: int = 2

    @property
    def count(self) -> int:
        return len(self.offsets)

    def size_bytes(self) -> int:
        return self.entry_width * len(self.bases) + self.offset_width * self.count

    def memory_bytes(self) -> int:
        return self.size_bytes()

    def lookup(self, position: int) -> int | None:
        k = bisect_right(self.bases, position) - 1
        if k < 0:
            return None
        target = position - self.bases[k]
        lo = k * self.block_len
        hi = min(lo + self.block_len, self.count)
        j = bisect_left(self.offsets, target, lo, hi)
        if j < hi and self.offsets[j] == target:
            return j
        return None

    def positions(self) -> list[int]:
        return [
            self.bases[j // self.block_len] + off for j, off in enumerate(self.offsets)
        ]

    def to_bytes(self) -> bytes:
        head = _MAGIC_BOC + bytes([VERSION])
        head += struct.pack(
            "<QQQQQ",
            self.entry_width,
            self.offset_width,
            self.block_len,
            self.count,
            len(self.bases),
        )
        return (
            head
            + _pack_ints(self.bases, self.entry_width)
            + _pack_ints(self.offsets, self.offset_width)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "BocHeader":
        entry_width, offset_width, block_len, count, n_bases = _read_envelope(
            data, _MAGIC_BOC, 5
        )
        off = 45
        bases = _unpack_ints(data, entry_width, n_bases, offset=off)
        offsets = _unpack_ints(
            data, offset_width, count, offset=off + entry_width * n_bases
        )
        return cls(bases, offsets, block_len, entry_width, offset_width)


def build_boc(
    positions,
    block_len: int = 16,
    entry_width: int = 8,
    offset_width: int = 2,
) -> BocHeader:
    if block_len < 1:
        raise ValueError("block length must be >= 1")
    if not 1 <= offset_width < entry_width:
        raise ValueError("offset width must satisfy 1 <= offset_width < entry_width")
    arr = _check_positions(positions)
    bases = arr[::block_len]
    offsets = arr - np.repeat(bases, block_len)[: arr.size]
    bound = 1 << (8 * offset_width)
    if int(offsets.max()) >= bound:
        bad = int(np.argmax(offsets >= np.uint64(bound)))
        block = bad // block_len
        raise OffsetOverflowError(
            f"offset {int(offsets[bad])} in block {block} does not fit "
            f"{offset_width} octets",
            block=block,
        )
    return BocHeader(bases.tolist(), offsets.tolist(), block_len, entry_width, offset_width)


def lookup_boc(header: BocHeader, position: int) -> int | None:
    return header.lookup(position)


def header_size(header) -> int:
    """Exact serialized size of the header structure, in octets."""
    return header.size_bytes()
