"""Canonical prefix coding over unsigned integer symbols.

Codes are optimal (Huffman lengths) and assigned canonically by
(length, symbol), so a codebook is fully described by its lengths.  Bits are
MSB-first within octets; the final partial octet is zero-padded.  A stream
position is addressed as (byte index, bit index) where byte*8+bit is the
absolute index of the next bit to decode, so (0, 0) is the very start and the
end position of one code is the start position of the next.

A single-symbol alphabet gets a deliberate 1-bit code: a zero-bit code would
never advance the stream.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import CorruptStreamError, FormatError, InvalidPositionError

_LUT_MAX_BITS = 11


@dataclass(frozen=True)
class BitStream:
    data: bytes
    bit_length: int

    def __post_init__(self):
        if self.bit_length > 8 * len(self.data):
            raise ValueError("bit length exceeds buffer")

    def size_bytes(self) -> int:
        return len(self.data)


class CodeBook:
    """Prefix-free code table: symbol -> (length, canonical code bits)."""

    def __init__(self, lengths: Mapping[int, int]):
        if not lengths:
            raise ValueError("codebook needs at least one symbol")
        self.lengths = dict(lengths)
        order = sorted(self.lengths, key=lambda s: (self.lengths[s], s))
        self.codes: dict[int, tuple[int, int]] = {}
        code = 0
        prev_len = self.lengths[order[0]]
        for sym in order:
            ln = self.lengths[sym]
            if ln < 1:
                raise ValueError(f"code length for symbol {sym} must be >= 1")
            code <<= ln - prev_len
            if code >= (1 << ln):
                raise ValueError("code lengths violate the Kraft inequality")
            self.codes[sym] = (ln, code)
            code += 1
            prev_len = ln
        self.max_len = prev_len
        self._canonical_order = order
        self._decode_tables: tuple | None = None

    def __len__(self) -> int:
        return len(self.codes)

    def __contains__(self, symbol: int) -> bool:
        return symbol in self.codes

    def encoded_bit_count(self, freqs: Mapping[int, int]) -> int:
        return sum(self.lengths[s] * n for s, n in freqs.items())

    def _tables(self):
        # Lazily built decode structures: per-length canonical ranges plus a
        # short-prefix lookup table for the hot path.
        if self._decode_tables is None:
            first_code = [0] * (self.max_len + 1)
            count = [0] * (self.max_len + 1)
            offset = [0] * (self.max_len + 1)
            syms = self._canonical_order
            for s in syms:
                count[self.lengths[s]] += 1
            pos = 0
            code = 0
            for ln in range(1, self.max_len + 1):
                code <<= 1
                first_code[ln] = code
                offset[ln] = pos
                code += count[ln]
                pos += count[ln]
            w = min(self.max_len, _LUT_MAX_BITS)
            lut: list[tuple[int, int] | None] = [None] * (1 << w)
            for s in syms:
                ln, c = self.codes[s]
                if ln <= w:
                    base = c << (w - ln)
                    for i in range(base, base + (1 << (w - ln))):
                        lut[i] = (s, ln)
            self._decode_tables = (first_code, count, offset, syms, w, lut)
        return self._decode_tables

    def decode_table_bytes(self) -> int:
        # Memory-model size of the resident decode structures (canonical
        # per-length tables), analogous to a decoding tree.
        return 8 * len(self.codes) + 16 * self.max_len

    def size_bytes(self) -> int:
        # Serialized: symbol count (8) + per symbol (symbol 8, length 1).
        return 8 + 9 * len(self.codes)

    def to_bytes(self) -> bytes:
        out = bytearray(struct.pack("<Q", len(self.codes)))
        for sym in sorted(self.codes):
            out += struct.pack("<QB", sym, self.lengths[sym])
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> tuple["CodeBook", int]:
        if len(data) < offset + 8:
            raise FormatError("truncated codebook")
        (n,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        if len(data) < offset + 9 * n:
            raise FormatError("truncated codebook entries")
        lengths = {}
        for _ in range(n):
            sym, ln = struct.unpack_from("<QB", data, offset)
            lengths[sym] = ln
            offset += 9
        return cls(lengths), offset


def build_codebook(freqs: Mapping[int, int]) -> CodeBook:
    """Optimal prefix codebook for the given symbol frequencies."""
    if not freqs:
        raise ValueError("frequency map is empty")
    for sym, n in freqs.items():
        if n <= 0:
            raise ValueError(f"frequency of symbol {sym} must be positive")
    symbols = sorted(freqs)
    if len(symbols) == 1:
        return CodeBook({symbols[0]: 1})
    # Ties merge lowest (weight, smallest contained symbol) first so files
    # are reproducible across runs.
    heap = [(freqs[s], s, i) for i, s in enumerate(symbols)]
    heapq.heapify(heap)
    parent: list[int] = [-1] * len(symbols)
    next_id = len(symbols)
    while len(heap) > 1:
        w1, m1, i1 = heapq.heappop(heap)
        w2, m2, i2 = heapq.heappop(heap)
        parent[i1] = next_id
        parent[i2] = next_id
        parent.append(-1)
        heapq.heappush(heap, (w1 + w2, min(m1, m2), next_id))
        next_id += 1
    lengths = {}
    for i, s in enumerate(symbols):
        depth = 0
        node = i
        while parent[node] != -1:
            node = parent[node]
            depth += 1
        lengths[s] = depth
    return CodeBook(lengths)


def encode_sequence(
    cb: CodeBook, symbols: Iterable[int]
) -> tuple[BitStream, list[tuple[int, int]]]:
    """Concatenate codes MSB-first.

    Returns the stream and, per symbol, the (byte, bit) position right after
    its code, usable to initialize a decoder on the following symbol.
    """
    codes = cb.codes
    out = bytearray()
    acc = 0
    acc_bits = 0
    total = 0
    ends: list[tuple[int, int]] = []
    for sym in symbols:
        entry = codes.get(sym)
        if entry is None:
            raise ValueError(f"symbol {sym} not in codebook")
        ln, code = entry
        acc = (acc << ln) | code
        acc_bits += ln
        total += ln
        while acc_bits >= 8:
            acc_bits -= 8
            out.append((acc >> acc_bits) & 0xFF)
        acc &= (1 << acc_bits) - 1
        ends.append((total >> 3, total & 7))
    if acc_bits:
        out.append((acc << (8 - acc_bits)) & 0xFF)
    return BitStream(bytes(out), total), ends


class Decoder:
    """Stateful decoder positioned at an arbitrary code boundary.

    Bits are pulled through a small integer buffer refilled a byte at a time,
    so the per-symbol hot path is one table index plus shifts.
    """

    __slots__ = (
        "_data", "_bits", "pos", "_cb",
        "_buf", "_fill", "_cursor", "_end",
        "_lut", "_w", "_first", "_count", "_offset", "_syms",
    )

    def __init__(self, cb: CodeBook, stream: BitStream, byte: int = 0, bit: int = 0):
        if not 0 <= bit <= 7:
            raise InvalidPositionError(f"bit index {bit} out of range 0..7")
        pos = byte * 8 + bit
        if pos > stream.bit_length:
            raise InvalidPositionError(
                f"position {pos} beyond stream of {stream.bit_length} bits"
            )
        self._data = stream.data
        self._bits = stream.bit_length
        self.pos = pos
        self._cb = cb
        self._first, self._count, self._offset, self._syms, self._w, self._lut = (
            cb._tables()
        )
        self._cursor = pos >> 3
        self._end = len(stream.data)
        self._buf = 0
        self._fill = 0
        lead = pos & 7
        if lead and self._cursor < self._end:
            self._buf = self._data[self._cursor] & (0xFF >> lead)
            self._fill = 8 - lead
            self._cursor += 1

    @property
    def bit_position(self) -> int:
        return self.pos

    def decode_next(self) -> int | None:
        """Next symbol, or None at end of stream.

        The zero-padding tail can alias a short code, so callers must bound
        the number of decodes by their own symbol count.
        """
        remaining = self._bits - self.pos
        if remaining <= 0:
            return None
        buf = self._buf
        fill = self._fill
        w = self._w
        if fill < w:
            data = self._data
            cursor = self._cursor
            end = self._end
            while fill < 56:
                buf = (buf << 8) | (data[cursor] if cursor < end else 0)
                cursor += 1
                fill += 8
            self._cursor = cursor
            self._buf = buf
            self._fill = fill
        entry = self._lut[buf >> (fill - w)]
        if entry is not None:
            sym, ln = entry
            if ln > remaining:
                raise CorruptStreamError("code truncated at end of stream")
            fill -= ln
            self._buf = buf & ((1 << fill) - 1)
            self._fill = fill
            self.pos += ln
            return sym
        return self._decode_long(remaining)

    def _decode_long(self, remaining: int):
        # Codes longer than the lookup table width.
        max_len = self._cb.max_len
        buf, fill = self._buf, self._fill
        data, end = self._data, self._end
        cursor = self._cursor
        while fill < max_len:
            buf = (buf << 8) | (data[cursor] if cursor < end else 0)
            cursor += 1
            fill += 8
        self._cursor = cursor
        first, count = self._first, self._count
        limit = min(max_len, remaining)
        for ln in range(self._w + 1, limit + 1):
            c = buf >> (fill - ln)
            if count[ln] and first[ln] <= c < first[ln] + count[ln]:
                fill -= ln
                self._buf = buf & ((1 << fill) - 1)
                self._fill = fill
                self.pos += ln
                return self._syms[self._offset[ln] + (c - first[ln])]
        raise CorruptStreamError(
            f"no code matches the {remaining} bits left at position {self.pos}"
        )


def decoder_init(cb: CodeBook, stream: BitStream, byte: int, bit: int) -> Decoder:
    return Decoder(cb, stream, byte, bit)


def decode_next(state: Decoder) -> int | None:
    return state.decode_next()


def decode_sequence(
    cb: CodeBook, stream: BitStream, count: int, byte: int = 0, bit: int = 0
) -> list[int]:
    """Decode exactly count symbols starting at a code boundary."""
    dec = Decoder(cb, stream, byte, bit)
    out = []
    for _ in range(count):
        sym = dec.decode_next()
        if sym is None:
            raise CorruptStreamError("stream ended before expected symbol count")
        out.append(sym)
    return out
