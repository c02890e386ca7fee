"""Relation data model: dimension schema, coordinates, logical positions.

A relation is a set of (coordinate vector -> measure) entries over an ordered
list of dimensions.  Cells are addressed either by coordinates or by their
logical position, the rank of the cell in the row-major linearization of the
full (mostly empty) multidimensional array.  The last dimension varies
fastest; positions are unsigned and must fit in 64 bits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import (
    EmptyRelationError,
    IngestError,
    InvalidCoordinateError,
    InvalidPositionError,
)

MAX_TOTAL_CELLS = 1 << 64


@dataclass(frozen=True)
class Dimension:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError(f"dimension {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"dimension {self.name!r} has duplicate values")

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DimensionSchema:
    dimensions: tuple[Dimension, ...]
    # Row-major strides, last dimension fastest; filled in __post_init__.
    strides: tuple[int, ...] = field(init=False, compare=False, repr=False)
    total_cells: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.dimensions:
            raise ValueError("schema needs at least one dimension")
        total = 1
        for dim in self.dimensions:
            total *= dim.cardinality
        if total >= MAX_TOTAL_CELLS:
            raise ValueError(
                f"total cell count {total} does not fit a 64-bit logical position"
            )
        strides = []
        acc = 1
        for dim in reversed(self.dimensions):
            strides.append(acc)
            acc *= dim.cardinality
        object.__setattr__(self, "strides", tuple(reversed(strides)))
        object.__setattr__(self, "total_cells", total)

    @property
    def n_dims(self) -> int:
        return len(self.dimensions)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(d.cardinality for d in self.dimensions)

    @classmethod
    def from_cardinalities(cls, cards: Sequence[int], names: Sequence[str] | None = None) -> "DimensionSchema":
        """Schema with synthetic value labels v0..v{c-1} per dimension."""
        dims = []
        for i, c in enumerate(cards):
            name = names[i] if names else f"d{i}"
            dims.append(Dimension(name, tuple(f"v{j}" for j in range(c))))
        return cls(tuple(dims))


def encode_logical_position(coords: Sequence[int], schema: DimensionSchema) -> int:
    """Row-major rank of a coordinate vector (last dimension fastest)."""
    if len(coords) != schema.n_dims:
        raise InvalidCoordinateError(
            f"expected {schema.n_dims} coordinates, got {len(coords)}"
        )
    pos = 0
    for idx, stride, dim in zip(coords, schema.strides, schema.dimensions):
        if not 0 <= idx < dim.cardinality:
            raise InvalidCoordinateError(
                f"coordinate {idx} out of range for dimension {dim.name!r} "
                f"(cardinality {dim.cardinality})"
            )
        pos += idx * stride
    return pos


def decode_logical_position(position: int, schema: DimensionSchema) -> tuple[int, ...]:
    """Inverse of encode_logical_position."""
    if not 0 <= position < schema.total_cells:
        raise InvalidPositionError(
            f"position {position} out of range [0, {schema.total_cells})"
        )
    coords = []
    rest = position
    for stride in schema.strides:
        idx, rest = divmod(rest, stride)
        coords.append(idx)
    return tuple(coords)


@dataclass
class Relation:
    """Ground-truth mapping from coordinate vectors to measures."""

    schema: DimensionSchema
    cells: dict[tuple[int, ...], float]
    measure_width: int = 8

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def get(self, coords: Sequence[int]) -> float | None:
        """Measure at coords, or None for an empty cell."""
        encode_logical_position(coords, self.schema)  # validates
        return self.cells.get(tuple(coords))

    def iter_cells(self) -> Iterator[tuple[tuple[int, ...], float]]:
        return iter(self.cells.items())


def logical_position_sequence(rel: Relation) -> list[int]:
    """Strictly increasing logical positions of the nonempty cells."""
    if not rel.cells:
        raise EmptyRelationError("relation has no cells")
    return sorted(encode_logical_position(c, rel.schema) for c in rel.cells)


@dataclass(frozen=True)
class IngestConfig:
    delimiter: str = ","
    has_header: bool = False
    sorted_values: bool = False
    dimension_names: tuple[str, ...] | None = None
    declared_values: tuple[tuple[str, ...], ...] | None = None
    measure_width: int = 8


@dataclass
class IngestResult:
    relation: Relation
    duplicates: int


def ingest_delimited(path: str | Path, config: IngestConfig = IngestConfig()) -> IngestResult:
    """Load a relation from delimited text, one `dim...,measure` row per cell.

    Dimension values are collected in first-seen order (or sorted when the
    config asks for it) unless pre-declared.  Duplicate keys are
    last-write-wins and counted.
    """
    rows: list[tuple[list[str], float]] = []
    n_dims: int | None = None
    if config.declared_values is not None:
        n_dims = len(config.declared_values)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f, delimiter=config.delimiter)
        for lineno, raw in enumerate(reader, start=1):
            if config.has_header and lineno == 1:
                continue
            if not raw:
                continue
            if n_dims is None:
                n_dims = len(raw) - 1
                if n_dims < 1:
                    raise IngestError("need at least one dimension column", row=lineno)
            if len(raw) != n_dims + 1:
                raise IngestError(
                    f"expected {n_dims + 1} columns, got {len(raw)}", row=lineno
                )
            try:
                measure = float(raw[-1])
            except ValueError:
                raise IngestError(f"measure {raw[-1]!r} is not numeric", row=lineno) from None
            rows.append((raw[:-1], measure))
    if n_dims is None or not rows:
        raise EmptyRelationError(f"no data rows in {path}")

    if config.declared_values is not None:
        value_lists = [list(vs) for vs in config.declared_values]
    else:
        seen: list[dict[str, None]] = [dict() for _ in range(n_dims)]
        for vals, _ in rows:
            for d, v in enumerate(vals):
                seen[d].setdefault(v)
        value_lists = [list(s) for s in seen]
        if config.sorted_values:
            value_lists = [sorted(vs) for vs in value_lists]

    names = config.dimension_names or tuple(f"d{i}" for i in range(n_dims))
    schema = DimensionSchema(
        tuple(Dimension(n, tuple(vs)) for n, vs in zip(names, value_lists))
    )
    index_maps = [{v: i for i, v in enumerate(vs)} for vs in value_lists]

    cells: dict[tuple[int, ...], float] = {}
    duplicates = 0
    for lineno_vals, measure in rows:
        try:
            key = tuple(index_maps[d][v] for d, v in enumerate(lineno_vals))
        except KeyError as exc:
            raise IngestError(f"undeclared dimension value {exc.args[0]!r}") from None
        if key in cells:
            duplicates += 1
        cells[key] = measure
    return IngestResult(
        Relation(schema, cells, measure_width=config.measure_width), duplicates
    )
