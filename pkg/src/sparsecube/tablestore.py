"""Baseline table representation: a sorted row file plus a paged key index.

Rows are fixed width (one 4-octet index per dimension, then the measure),
sorted by logical position.  The index is a static bulk-loaded tree whose
leaf level is sparse: one (first key, group number) entry per group of rows
that fills about one page.  A lookup walks root to leaf, then fetches the
group's row range and binary-searches inside it, so every query costs
O(height) page reads plus one row-range read.  All of it goes through the
same block-access layer as the multidimensional store.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .blockio import BlockReader, SimCache
from .errors import EmptyRelationError, FormatError
from .relation import (
    DimensionSchema,
    Relation,
    encode_logical_position,
)
from .mdstore import _schema_from_json, _schema_to_json

COORD_WIDTH = 4
_IDX_MAGIC = b"TIDX"
_IDX_VERSION = 1
_ENTRY = struct.Struct("<QQ")  # key, child page or row group
_COUNT = struct.Struct("<H")
_META = struct.Struct("<QQQQQQQ")  # page_size, row_width, n_rows, rows_per_group,
#                                    n_groups, root_page, height


@dataclass(frozen=True)
class TableParams:
    page_size: int = 4096


class TableStore:
    def __init__(
        self,
        schema: DimensionSchema,
        measure_width: int,
        page_size: int,
        n_rows: int,
        rows_per_group: int,
        n_groups: int,
        root_page: int,
        height: int,
        n_pages: int,
        rows_mem: bytes | None = None,
        rows_reader: BlockReader | None = None,
        idx_mem: bytes | None = None,
        idx_reader: BlockReader | None = None,
    ):
        self.schema = schema
        self.measure_width = measure_width
        self.page_size = page_size
        self.row_width = schema.n_dims * COORD_WIDTH + measure_width
        self.n_rows = n_rows
        self.rows_per_group = rows_per_group
        self.n_groups = n_groups
        self.root_page = root_page
        self.height = height
        self.n_pages = n_pages
        self._rows_mem = rows_mem
        self._rows_reader = rows_reader
        self._idx_mem = idx_mem
        self._idx_reader = idx_reader
        self._measure = struct.Struct("<f" if measure_width == 4 else "<d")

    def close(self) -> None:
        for r in (self._rows_reader, self._idx_reader):
            if r is not None:
                r.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- raw access -------------------------------------------------------

    def _read_page(self, page_no: int) -> bytes:
        off = page_no * self.page_size
        if self._idx_mem is not None:
            return self._idx_mem[off : off + self.page_size]
        return self._idx_reader.read_at(off, self.page_size)

    def _read_rows(self, first_row: int, count: int) -> bytes:
        off = first_row * self.row_width
        length = count * self.row_width
        if self._rows_mem is not None:
            return self._rows_mem[off : off + length]
        return self._rows_reader.read_at(off, length)

    def rows_file_size(self) -> int:
        return self.n_rows * self.row_width

    def idx_file_size(self) -> int:
        return self.n_pages * self.page_size

    def total_size(self) -> int:
        return self.rows_file_size() + self.idx_file_size()

    # -- lookup -----------------------------------------------------------

    def _page_floor(self, page: bytes, key: int) -> int:
        """Index of the rightmost entry with entry.key <= key, or -1."""
        (count,) = _COUNT.unpack_from(page, 0)
        lo, hi = 0, count - 1
        if hi < 0 or _ENTRY.unpack_from(page, 2)[0] > key:
            return -1
        while lo < hi:
            mid = (lo + hi + 1) >> 1
            if _ENTRY.unpack_from(page, 2 + 16 * mid)[0] <= key:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def _row_key(self, rows: bytes, i: int) -> int:
        off = i * self.row_width
        key = 0
        for stride in self.schema.strides:
            (c,) = struct.unpack_from("<I", rows, off)
            key += c * stride
            off += COORD_WIDTH
        return key

    def point_query(self, coords: Sequence[int]) -> float | None:
        key = encode_logical_position(coords, self.schema)
        if self._idx_reader is not None:
            # The walk enters through the meta page (root pointer lives
            # there); it stays cached, but its block belongs to the
            # representation and must be accounted like any other.
            self._read_page(0)
        page_no = self.root_page
        for _ in range(self.height):
            page = self._read_page(page_no)
            slot = self._page_floor(page, key)
            if slot < 0:
                return None
            page_no = _ENTRY.unpack_from(page, 2 + 16 * slot)[1]
        group = page_no  # leaf entries point at row groups
        first = group * self.rows_per_group
        count = min(self.rows_per_group, self.n_rows - first)
        rows = self._read_rows(first, count)
        lo, hi = 0, count - 1
        while lo <= hi:
            mid = (lo + hi) >> 1
            k = self._row_key(rows, mid)
            if k == key:
                off = mid * self.row_width + self.schema.n_dims * COORD_WIDTH
                return self._measure.unpack_from(rows, off)[0]
            if k < key:
                lo = mid + 1
            else:
                hi = mid - 1
        return None


def _pack_page(entries: list[tuple[int, int]], page_size: int) -> bytes:
    page = bytearray(page_size)
    _COUNT.pack_into(page, 0, len(entries))
    off = 2
    for key, val in entries:
        _ENTRY.pack_into(page, off, key, val)
        off += 16
    return bytes(page)


def build_table(rel: Relation, params: TableParams = TableParams()) -> TableStore:
    if not rel.cells:
        raise EmptyRelationError("cannot build a table from an empty relation")
    page_size = params.page_size
    order = sorted(
        (encode_logical_position(c, rel.schema), c, v) for c, v in rel.cells.items()
    )
    n_rows = len(order)
    n_dims = rel.schema.n_dims
    row_width = n_dims * COORD_WIDTH + rel.measure_width
    if row_width > page_size:
        raise ValueError("row wider than a page")

    coords = np.asarray([c for _, c, _ in order], dtype="<u4")
    measures = np.asarray(
        [v for _, _, v in order], dtype="<f4" if rel.measure_width == 4 else "<f8"
    )
    dtype = np.dtype(
        [("c", "<u4", (n_dims,)), ("m", "<f4" if rel.measure_width == 4 else "<f8")]
    )
    rows_arr = np.empty(n_rows, dtype=dtype)
    rows_arr["c"] = coords
    rows_arr["m"] = measures
    rows_mem = rows_arr.tobytes()

    keys = [k for k, _, _ in order]
    rows_per_group = max(1, page_size // row_width)
    n_groups = (n_rows + rows_per_group - 1) // rows_per_group

    entries_per_page = (page_size - 2) // 16
    level = [
        (keys[g * rows_per_group], g) for g in range(n_groups)
    ]
    pages: list[bytes] = []
    first_page_of_level = 1  # page 0 is the meta page
    height = 0
    while True:
        height += 1
        level_pages = [
            level[i : i + entries_per_page]
            for i in range(0, len(level), entries_per_page)
        ]
        pages.extend(_pack_page(chunk, page_size) for chunk in level_pages)
        if len(level_pages) == 1:
            break
        level = [
            (chunk[0][0], first_page_of_level + i)
            for i, chunk in enumerate(level_pages)
        ]
        first_page_of_level += len(level_pages)
    root_page = len(pages)  # levels are written bottom-up, root last; meta is page 0

    meta = bytearray(page_size)
    meta[:4] = _IDX_MAGIC
    meta[4] = _IDX_VERSION
    _META.pack_into(
        meta, 5, page_size, row_width, n_rows, rows_per_group, n_groups, root_page,
        height,
    )
    idx_mem = bytes(meta) + b"".join(pages)

    return TableStore(
        rel.schema,
        rel.measure_width,
        page_size,
        n_rows,
        rows_per_group,
        n_groups,
        root_page,
        height,
        n_pages=1 + len(pages),
        rows_mem=rows_mem,
        idx_mem=idx_mem,
    )


def table_point_query(store: TableStore, coords: Sequence[int]) -> float | None:
    return store.point_query(coords)


def table_paths(base: str | Path) -> tuple[Path, Path, Path]:
    base = str(base)
    return Path(base + ".schema"), Path(base + ".rows"), Path(base + ".idx")


def save_table(store: TableStore, base: str | Path) -> None:
    schema_p, rows_p, idx_p = table_paths(base)
    schema_p.write_bytes(_schema_to_json(store.schema, store.measure_width))
    if store._rows_mem is None or store._idx_mem is None:
        raise ValueError("only freshly built tables can be saved")
    rows_p.write_bytes(store._rows_mem)
    idx_p.write_bytes(store._idx_mem)


def load_table(
    base: str | Path,
    preload: bool = False,
    cache: SimCache | None = None,
) -> TableStore:
    schema_p, rows_p, idx_p = table_paths(base)
    schema, measure_width = _schema_from_json(schema_p.read_bytes())
    meta_raw = idx_p.read_bytes()[:4096]
    if meta_raw[:4] != _IDX_MAGIC:
        raise FormatError(f"bad index magic {meta_raw[:4]!r}")
    if meta_raw[4] != _IDX_VERSION:
        raise FormatError(f"unsupported index version {meta_raw[4]}")
    page_size, row_width, n_rows, rows_per_group, n_groups, root_page, height = (
        _META.unpack_from(meta_raw, 5)
    )
    expect_width = schema.n_dims * COORD_WIDTH + measure_width
    if row_width != expect_width:
        raise FormatError(
            f"row width {row_width} does not match schema ({expect_width})"
        )
    n_pages = Path(idx_p).stat().st_size // page_size
    if preload:
        return TableStore(
            schema, measure_width, page_size, n_rows, rows_per_group, n_groups,
            root_page, height, n_pages,
            rows_mem=rows_p.read_bytes(), idx_mem=idx_p.read_bytes(),
        )
    # Row groups are the natural I/O unit of the packed row file; reading in
    # group-sized blocks keeps every query on exactly one rows-file block.
    rows_reader = BlockReader(
        rows_p, block_size=rows_per_group * row_width, cache=cache, name="tbl.rows"
    )
    idx_reader = BlockReader(idx_p, block_size=page_size, cache=cache, name="tbl.idx")
    return TableStore(
        schema, measure_width, page_size, n_rows, rows_per_group, n_groups,
        root_page, height, n_pages,
        rows_reader=rows_reader, idx_reader=idx_reader,
    )
