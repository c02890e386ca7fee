"""Difference-coded headers: DSC (packed gaps) and DHC (Huffman-coded gaps).

Both store the full jump sequence (absolute positions restarting the running
sum wherever a gap overflows the difference width) next to the per-cell
difference sequence.  The first difference is zero by definition and is
carried by the first jump.

Point queries binary-search the jumps at sampled stride positions, then scan
differences forward, switching to the next jump whenever a zero difference
comes up.  The sampled accelerator (and, for DHC, the stream anchors) are
never serialized; they are rebuilt in one pass over the stored differences
when a header is loaded.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CorruptStreamError, FormatError
from .huffman import BitStream, CodeBook, Decoder, build_codebook, encode_sequence

VERSION = 1

_MAGIC_DSC = b"DSCH"
_MAGIC_DHC = b"DHCH"


def build_difference_sequence(
    positions: Sequence[int], diff_bits: int
) -> tuple[list[int], list[int], list[int]]:
    """Split a strictly increasing sequence into (diffs, jumps, jump indices).

    diffs[i] is the gap to the previous position when it fits diff_bits bits,
    else 0; diffs[0] is always 0.  jumps holds the absolute position behind
    every zero diff, and the returned indices locate those zeros.
    """
    if not 1 <= diff_bits <= 32:
        raise ValueError("difference width must be 1..32 bits")
    arr = np.asarray(positions, dtype=np.uint64)
    if arr.size == 0:
        raise ValueError("position sequence is empty")
    if arr.size > 1 and not (np.diff(arr) > 0).all():
        raise ValueError("position sequence must be strictly increasing")
    max_diff = np.uint64((1 << diff_bits) - 1)
    deltas = np.diff(arr)
    over = deltas > max_diff
    diffs = np.zeros(arr.size, dtype=np.uint64)
    diffs[1:] = np.where(over, np.uint64(0), deltas)
    jump_idx = np.concatenate(
        [np.zeros(1, dtype=np.int64), np.flatnonzero(over) + 1]
    )
    jumps = arr[jump_idx]
    return diffs.tolist(), jumps.tolist(), jump_idx.tolist()


def pack_diffs(values: Sequence[int], diff_bits: int) -> bytes:
    """Pack diff_bits-wide unsigned values into little-endian bit groups."""
    if diff_bits == 8:
        return np.asarray(values, dtype="<u1").tobytes()
    if diff_bits == 16:
        return np.asarray(values, dtype="<u2").tobytes()
    if diff_bits == 32:
        return np.asarray(values, dtype="<u4").tobytes()
    out = bytearray()
    acc = 0
    nbits = 0
    for v in values:
        acc |= int(v) << nbits
        nbits += diff_bits
        while nbits >= 8:
            out.append(acc & 0xFF)
            acc >>= 8
            nbits -= 8
    if nbits:
        out.append(acc & 0xFF)
    return bytes(out)


def packed_size(count: int, diff_bits: int) -> int:
    return (diff_bits * count + 7) // 8


def make_diff_reader(data: bytes, diff_bits: int) -> Callable[[int], int]:
    """Random-access reader over packed differences."""
    if diff_bits == 8:
        return data.__getitem__
    if diff_bits == 16:
        u16 = struct.Struct("<H").unpack_from
        return lambda i: u16(data, i << 1)[0]
    if diff_bits == 32:
        u32 = struct.Struct("<I").unpack_from
        return lambda i: u32(data, i << 2)[0]
    mask = (1 << diff_bits) - 1

    def read(i: int) -> int:
        bitpos = i * diff_bits
        a, shift = divmod(bitpos, 8)
        b = (bitpos + diff_bits + 7) // 8
        return (int.from_bytes(data[a:b], "little") >> shift) & mask

    return read


def unpack_diffs(data: bytes, diff_bits: int, count: int) -> list[int]:
    if diff_bits == 8:
        return np.frombuffer(data, dtype="<u1", count=count).tolist()
    if diff_bits == 16:
        return np.frombuffer(data, dtype="<u2", count=count).tolist()
    if diff_bits == 32:
        return np.frombuffer(data, dtype="<u4", count=count).tolist()
    read = make_diff_reader(data, diff_bits)
    return [read(i) for i in range(count)]


def _pack_jumps(jumps: list[int], entry_width: int) -> bytes:
    if entry_width == 8:
        return np.asarray(jumps, dtype="<u8").tobytes()
    return b"".join(int(j).to_bytes(entry_width, "little") for j in jumps)


def _unpack_jumps(data: bytes, offset: int, entry_width: int, count: int) -> list[int]:
    end = offset + entry_width * count
    if end > len(data):
        raise FormatError("truncated jump sequence")
    if entry_width == 8:
        return np.frombuffer(data, dtype="<u8", count=count, offset=offset).tolist()
    return [
        int.from_bytes(data[offset + i * entry_width : offset + (i + 1) * entry_width], "little")
        for i in range(count)
    ]


def _sampled_floor(jumps: list[int], stride: int, position: int) -> int:
    """Largest sampled slot m with jumps[m*stride] <= position, or -1."""
    if position < jumps[0]:
        return -1
    lo, hi = 0, (len(jumps) - 1) // stride
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if jumps[mid * stride] <= position:
            lo = mid
        else:
            hi = mid - 1
    return lo


@dataclass
class DscHeader:
    """Packed difference sequence plus jump sequence."""

    diff_bits: int
    entry_width: int
    stride: int
    count: int
    jumps: list[int]
    diff_data: bytes
    accel: list[int] = field(default_factory=list)  # sampled, rebuilt on load
    _reader: Callable[[int], int] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if not self.accel:
            self.accel = self.rebuild_accel()

    def _diff_reader(self) -> Callable[[int], int]:
        if self._reader is None:
            self._reader = make_diff_reader(self.diff_data, self.diff_bits)
        return self._reader

    def rebuild_accel(self) -> list[int]:
        """One pass over the stored differences; zeros mark the jumps."""
        if len(self.diff_data) < packed_size(self.count, self.diff_bits):
            raise CorruptStreamError("difference data shorter than declared count")
        diffs = unpack_diffs(self.diff_data, self.diff_bits, self.count)
        zero_idx = [i for i, d in enumerate(diffs) if d == 0]
        if len(zero_idx) != len(self.jumps):
            raise CorruptStreamError(
                f"{len(zero_idx)} zero differences but {len(self.jumps)} jumps"
            )
        return zero_idx[:: self.stride]

    def size_bytes(self) -> int:
        return packed_size(self.count, self.diff_bits) + self.entry_width * len(
            self.jumps
        )

    def memory_bytes(self) -> int:
        return self.size_bytes() + self.entry_width * len(self.accel)

    def lookup(self, position: int) -> int | None:
        jumps = self.jumps
        m = _sampled_floor(jumps, self.stride, position)
        if m < 0:
            return None
        k = m * self.stride
        cur = jumps[k]
        if cur == position:
            return self.accel[m]
        read = self._diff_reader()
        n = self.count
        i = self.accel[m] + 1
        while i < n:
            d = read(i)
            if d == 0:
                k += 1
                if k >= len(jumps):
                    raise CorruptStreamError("more zero differences than jumps")
                cur = jumps[k]
            else:
                cur += d
            if cur >= position:
                return i if cur == position else None
            i += 1
        return None

    def positions(self) -> list[int]:
        diffs = unpack_diffs(self.diff_data, self.diff_bits, self.count)
        out = []
        cur = 0
        k = -1
        for d in diffs:
            if d == 0:
                k += 1
                cur = self.jumps[k]
            else:
                cur += d
            out.append(cur)
        return out

    def to_bytes(self) -> bytes:
        head = _MAGIC_DSC + bytes([VERSION])
        head += struct.pack(
            "<QQQQQ",
            self.entry_width,
            self.diff_bits,
            self.stride,
            self.count,
            len(self.jumps),
        )
        return head + _pack_jumps(self.jumps, self.entry_width) + self.diff_data

    @classmethod
    def from_bytes(cls, data: bytes) -> "DscHeader":
        if data[:4] != _MAGIC_DSC:
            raise FormatError(f"bad magic {data[:4]!r}")
        if data[4] != VERSION:
            raise FormatError(f"unsupported version {data[4]}")
        entry_width, diff_bits, stride, count, n_jumps = struct.unpack_from(
            "<QQQQQ", data, 5
        )
        off = 45
        jumps = _unpack_jumps(data, off, entry_width, n_jumps)
        off += entry_width * n_jumps
        need = packed_size(count, diff_bits)
        diff_data = data[off : off + need]
        if len(diff_data) < need:
            raise CorruptStreamError("truncated difference data")
        return cls(diff_bits, entry_width, stride, count, jumps, diff_data)


def build_dsc(
    positions: Sequence[int],
    diff_bits: int = 16,
    entry_width: int = 8,
    stride: int = 16,
) -> DscHeader:
    diffs, jumps, jump_idx = build_difference_sequence(positions, diff_bits)
    return DscHeader(
        diff_bits,
        entry_width,
        stride,
        len(diffs),
        jumps,
        pack_diffs(diffs, diff_bits),
        accel=jump_idx[::stride],
    )


def lookup_dsc(header: DscHeader, position: int) -> int | None:
    return header.lookup(position)


@dataclass
class DhcHeader:
    """Jump sequence plus the Huffman code of the difference sequence.

    The stream encodes diffs 1..count-1 (the leading zero is implied by the
    first jump).  byte_pos/bit_pos anchor, per sampled jump, the stream
    position right after that jump's zero diff, so a decoder initialized
    there yields the following difference first.
    """

    diff_bits: int
    entry_width: int
    stride: int
    count: int
    jumps: list[int]
    codebook: CodeBook | None
    stream: BitStream
    accel: list[int] = field(default_factory=list)
    byte_pos: list[int] = field(default_factory=list)
    bit_pos: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.accel:
            self.accel, self.byte_pos, self.bit_pos = self.rebuild_aux()

    def rebuild_aux(self) -> tuple[list[int], list[int], list[int]]:
        """Decode the stream once, rebuilding sampled accel/byte/bit arrays."""
        accel = [0]
        anchors = [(0, 0)]
        if self.count > 1:
            if self.codebook is None:
                raise CorruptStreamError("missing codebook for a multi-cell stream")
            dec = Decoder(self.codebook, self.stream, 0, 0)
            for i in range(self.count - 1):
                sym = dec.decode_next()
                if sym is None:
                    raise CorruptStreamError("stream ended before declared count")
                if sym == 0:
                    t = dec.bit_position
                    accel.append(i + 1)
                    anchors.append((t >> 3, t & 7))
            if self.stream.bit_length - dec.bit_position >= 8:
                raise CorruptStreamError("trailing data after final code")
        if len(accel) != len(self.jumps):
            raise CorruptStreamError(
                f"{len(accel)} zero differences but {len(self.jumps)} jumps"
            )
        s = self.stride
        return (
            accel[::s],
            [a[0] for a in anchors[::s]],
            [a[1] for a in anchors[::s]],
        )

    def codebook_bytes(self) -> int:
        return self.codebook.size_bytes() if self.codebook else 0

    def stream_bytes(self) -> int:
        # Raw octets plus the stored bit length.
        return 8 + len(self.stream.data)

    def size_bytes(self) -> int:
        return (
            self.entry_width * len(self.jumps)
            + self.codebook_bytes()
            + self.stream_bytes()
        )

    def memory_bytes(self) -> int:
        aux = len(self.accel) * (2 * self.entry_width + 1)
        tables = self.codebook.decode_table_bytes() if self.codebook else 0
        return self.size_bytes() + aux + tables

    def lookup(self, position: int) -> int | None:
        jumps = self.jumps
        m = _sampled_floor(jumps, self.stride, position)
        if m < 0:
            return None
        k = m * self.stride
        cur = jumps[k]
        idx = self.accel[m]
        if cur == position:
            return idx
        if self.codebook is None:
            return None
        # Inlined table-driven decode: scans dominate point-query cost, so the
        # general Decoder is only consulted for codes past the table width.
        first, count, offset, syms, w, lut = self.codebook._tables()
        data = self.stream.data
        bits = self.stream.bit_length
        end = len(data)
        pos = self.byte_pos[m] * 8 + self.bit_pos[m]
        cursor = pos >> 3
        buf = 0
        fill = 0
        lead = pos & 7
        if lead and cursor < end:
            buf = data[cursor] & (0xFF >> lead)
            fill = 8 - lead
            cursor += 1
        n = self.count
        while idx + 1 < n:
            if pos >= bits:
                raise CorruptStreamError("stream ended before declared count")
            if fill < w:
                while fill < 56:
                    buf = (buf << 8) | (data[cursor] if cursor < end else 0)
                    cursor += 1
                    fill += 8
            entry = lut[buf >> (fill - w)]
            if entry is None:
                return self._scan_from(position, pos, idx, k, cur)
            d, ln = entry
            if ln > bits - pos:
                raise CorruptStreamError("code truncated at end of stream")
            fill -= ln
            buf &= (1 << fill) - 1
            pos += ln
            idx += 1
            if d == 0:
                k += 1
                if k >= len(jumps):
                    raise CorruptStreamError("more zero differences than jumps")
                cur = jumps[k]
            else:
                cur += d
            if cur >= position:
                return idx if cur == position else None
        return None

    def _scan_from(self, position, pos, idx, k, cur) -> int | None:
        # Continue the scan through the general decoder (long codes).
        jumps = self.jumps
        dec = Decoder(self.codebook, self.stream, pos >> 3, pos & 7)
        decode = dec.decode_next
        n = self.count
        while idx + 1 < n:
            d = decode()
            if d is None:
                raise CorruptStreamError("stream ended before declared count")
            idx += 1
            if d == 0:
                k += 1
                if k >= len(jumps):
                    raise CorruptStreamError("more zero differences than jumps")
                cur = jumps[k]
            else:
                cur += d
            if cur >= position:
                return idx if cur == position else None
        return None

    def positions(self) -> list[int]:
        out = [self.jumps[0]]
        if self.count > 1:
            if self.codebook is None:
                raise CorruptStreamError("missing codebook for a multi-cell stream")
            dec = Decoder(self.codebook, self.stream, 0, 0)
            cur = self.jumps[0]
            k = 0
            for _ in range(self.count - 1):
                d = dec.decode_next()
                if d == 0:
                    k += 1
                    cur = self.jumps[k]
                else:
                    cur += d
                out.append(cur)
        return out

    def to_bytes(self) -> bytes:
        head = _MAGIC_DHC + bytes([VERSION])
        head += struct.pack(
            "<QQQQQQ",
            self.entry_width,
            self.diff_bits,
            self.stride,
            self.count,
            len(self.jumps),
            self.stream.bit_length,
        )
        jumps = _pack_jumps(self.jumps, self.entry_width)
        cb = self.codebook.to_bytes() if self.codebook else struct.pack("<Q", 0)
        return head + jumps + cb + self.stream.data

    @classmethod
    def from_bytes(cls, data: bytes) -> "DhcHeader":
        if data[:4] != _MAGIC_DHC:
            raise FormatError(f"bad magic {data[:4]!r}")
        if data[4] != VERSION:
            raise FormatError(f"unsupported version {data[4]}")
        entry_width, diff_bits, stride, count, n_jumps, bit_length = struct.unpack_from(
            "<QQQQQQ", data, 5
        )
        off = 53
        jumps = _unpack_jumps(data, off, entry_width, n_jumps)
        off += entry_width * n_jumps
        (n_syms,) = struct.unpack_from("<Q", data, off)
        if n_syms == 0:
            codebook = None
            off += 8
        else:
            codebook, off = CodeBook.from_bytes(data, off)
        nbytes = (bit_length + 7) // 8
        raw = data[off : off + nbytes]
        if len(raw) < nbytes:
            raise CorruptStreamError("truncated code stream")
        return cls(diff_bits, entry_width, stride, count, jumps, codebook,
                   BitStream(raw, bit_length))


def build_dhc(
    positions: Sequence[int],
    diff_bits: int = 16,
    entry_width: int = 8,
    stride: int = 16,
) -> DhcHeader:
    diffs, jumps, jump_idx = build_difference_sequence(positions, diff_bits)
    symbols = diffs[1:]
    if symbols:
        freqs: dict[int, int] = {}
        for s in symbols:
            freqs[s] = freqs.get(s, 0) + 1
        codebook = build_codebook(freqs)
        stream, ends = encode_sequence(codebook, symbols)
    else:
        codebook = None
        stream = BitStream(b"", 0)
        ends = []
    anchors = [(0, 0) if a == 0 else ends[a - 1] for a in jump_idx]
    sampled = anchors[::stride]
    return DhcHeader(
        diff_bits,
        entry_width,
        stride,
        len(diffs),
        jumps,
        codebook,
        stream,
        accel=jump_idx[::stride],
        byte_pos=[a[0] for a in sampled],
        bit_pos=[a[1] for a in sampled],
    )


def lookup_dhc(header: DhcHeader, position: int) -> int | None:
    return header.lookup(position)


def rebuild_accelerators(header: DscHeader | DhcHeader):
    """Repopulate the sampled in-memory arrays from the stored differences."""
    if isinstance(header, DscHeader):
        header.accel = header.rebuild_accel()
        return header.accel
    header.accel, header.byte_pos, header.bit_pos = header.rebuild_aux()
    return header.accel, header.byte_pos, header.bit_pos
