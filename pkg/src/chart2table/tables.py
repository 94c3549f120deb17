"""Core data model: tables, axis descriptions, benchmark items.

Everything here is an immutable value object; construction validates the
cheap structural invariants, while :func:`validate_table` produces a full
violation report for tables of unknown provenance (e.g. parsed model
output).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

REL_TOL = 1e-9

SCHEMA_VERSION = 1


class ChartType(str, Enum):
    LINE = "line"
    DOT = "dot"
    BAR = "bar"


class Part(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Condition(str, Enum):
    BASE = "base"
    TICKS3 = "ticks3"
    TICKS11 = "ticks11"
    POS = "pos"
    NEG = "neg"
    EXT = "ext"
    COMMA = "comma"
    SCI = "sci"
    ABBR = "abbr"


#: Conditions that are legal for each benchmark part.
PART_CONDITIONS = {
    Part.A: (Condition.BASE,),
    Part.B: (Condition.TICKS3, Condition.TICKS11),
    Part.C: (Condition.POS, Condition.NEG, Condition.EXT),
    Part.D: (Condition.COMMA, Condition.SCI, Condition.ABBR),
}


class TickFormat(str, Enum):
    PLAIN = "plain"
    COMMA = "comma"
    SCIENTIFIC = "scientific"
    ABBREV = "abbrev"


#: Tick format used to label each condition's y-axis.
CONDITION_FORMATS = {
    Condition.COMMA: TickFormat.COMMA,
    Condition.SCI: TickFormat.SCIENTIFIC,
    Condition.ABBR: TickFormat.ABBREV,
}


def digit_length(x: float) -> int:
    """Number of digits in the integer part of ``|x|``.

    Returns 0 for ``|x| < 1`` (including 0), and d for
    ``10^(d-1) <= |x| < 10^d``.  Raises ``ValueError`` for non-finite input.
    """
    if not math.isfinite(x):
        raise ValueError(f"digit_length requires a finite value, got {x!r}")
    a = abs(x)
    if a < 1.0:
        return 0
    # int() truncation is exact for floats, so this counts integer-part
    # digits without log10 edge cases at powers of ten.
    return len(str(int(a)))


@dataclass(frozen=True, slots=True)
class DataTable:
    """A chart's underlying table.

    Rows are x-axis categories, columns are entities (data series / legend
    items).  Ground-truth tables are fully populated with finite numbers;
    predicted tables may carry ``None`` cells for values the parser could
    not recover, which score as maximal distance downstream.
    """

    id: str
    row_headers: tuple[str, ...]
    col_headers: tuple[str, ...]
    cells: tuple[tuple[float | None, ...], ...]

    @classmethod
    def build(
        cls,
        id: str,
        row_headers: Sequence[str],
        col_headers: Sequence[str],
        cells: Iterable[Iterable[float | None]],
    ) -> "DataTable":
        """Normalize arbitrary sequences into the immutable representation."""
        grid = tuple(
            tuple(None if v is None else float(v) for v in row) for row in cells
        )
        return cls(str(id), tuple(map(str, row_headers)), tuple(map(str, col_headers)), grid)

    @property
    def n_rows(self) -> int:
        return len(self.row_headers)

    @property
    def n_cols(self) -> int:
        return len(self.col_headers)

    @property
    def n_cells(self) -> int:
        return sum(len(r) for r in self.cells)

    def max_cell(self) -> float:
        values = [v for row in self.cells for v in row if v is not None]
        if not values:
            raise ValueError(f"table {self.id!r} has no populated cells")
        return max(values)

    def column(self, j: int) -> tuple[float | None, ...]:
        return tuple(row[j] for row in self.cells)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "row_headers": list(self.row_headers),
            "col_headers": list(self.col_headers),
            "cells": [list(row) for row in self.cells],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataTable":
        return cls.build(d["id"], d["row_headers"], d["col_headers"], d["cells"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "DataTable":
        return cls.from_dict(json.loads(s))


def validate_table(table: DataTable) -> list[str]:
    """Report every invariant violation of *table*; empty list means valid.

    Checked: rectangular fully-populated grid, grid shape matching the
    headers, duplicate row/column headers, non-finite cell values.
    """
    violations: list[str] = []
    if len(table.cells) != len(table.row_headers):
        violations.append(
            f"row count mismatch: {len(table.cells)} cell rows for "
            f"{len(table.row_headers)} row headers"
        )
    width = len(table.col_headers)
    for i, row in enumerate(table.cells):
        if len(row) != width:
            violations.append(f"ragged grid: row {i} has {len(row)} cells, expected {width}")
    if len(set(table.col_headers)) != len(table.col_headers):
        violations.append("duplicate header: repeated entity name in col_headers")
    if len(set(table.row_headers)) != len(table.row_headers):
        violations.append("duplicate header: repeated category in row_headers")
    for i, row in enumerate(table.cells):
        for j, v in enumerate(row):
            if v is None:
                violations.append(f"absent cell at ({i}, {j})")
            elif not math.isfinite(v):
                violations.append(f"non-finite cell at ({i}, {j}): {v!r}")
    return violations


@dataclass(frozen=True, slots=True)
class AxisSpec:
    """Y-axis description: evenly spaced major ticks plus the derived
    minor-tick estimate (one fifth of the major interval)."""

    tick_values: tuple[float, ...]
    major_interval: float
    minor_estimate_t: float
    format: TickFormat = TickFormat.PLAIN
    n_major_ticks: int = 6

    def __post_init__(self) -> None:
        ticks = self.tick_values
        if len(ticks) != self.n_major_ticks:
            raise ValueError(
                f"expected {self.n_major_ticks} ticks, got {len(ticks)}"
            )
        if self.major_interval <= 0:
            raise ValueError("major_interval must be positive")
        if self.minor_estimate_t != self.major_interval / 5:
            raise ValueError("minor_estimate_t must be major_interval / 5")
        scale = max(abs(ticks[0]), abs(ticks[-1]), 1e-300)
        for a, b in zip(ticks, ticks[1:]):
            if b <= a:
                raise ValueError("tick_values must be strictly increasing")
            if abs((b - a) - self.major_interval) > REL_TOL * scale:
                raise ValueError(
                    f"unequal tick spacing: {b - a} vs interval {self.major_interval}"
                )

    @classmethod
    def from_ticks(cls, ticks: Sequence[float], format: TickFormat = TickFormat.PLAIN) -> "AxisSpec":
        """Build a spec from the tick list alone (interval from the first gap)."""
        ticks = tuple(float(v) for v in ticks)
        if len(ticks) < 2:
            raise ValueError("need at least two ticks")
        interval = ticks[1] - ticks[0]
        return cls(ticks, interval, interval / 5, format, len(ticks))

    @property
    def min_tick(self) -> float:
        return self.tick_values[0]

    @property
    def max_tick(self) -> float:
        return self.tick_values[-1]

    def to_dict(self) -> dict:
        return {
            "tick_values": list(self.tick_values),
            "major_interval": self.major_interval,
            "minor_estimate_t": self.minor_estimate_t,
            "format": self.format.value,
            "n_major_ticks": self.n_major_ticks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AxisSpec":
        return cls(
            tuple(float(v) for v in d["tick_values"]),
            float(d["major_interval"]),
            float(d["minor_estimate_t"]),
            TickFormat(d["format"]),
            int(d["n_major_ticks"]),
        )


@dataclass(frozen=True, slots=True)
class BenchmarkItem:
    """One chart instance: a table rendered as one chart type under one
    axis condition."""

    item_id: str
    table_id: str
    chart_type: ChartType
    part: Part
    digit_length: int
    entity_count: int
    condition: Condition
    axis: AxisSpec
    image_ref: str = ""
    # Part C items reference shifted copies of their Part A table; this key
    # pairs them back to the unshifted original for paired statistics.
    base_table_id: str = ""

    def __post_init__(self) -> None:
        if self.condition not in PART_CONDITIONS[self.part]:
            raise ValueError(
                f"condition {self.condition.value!r} is not valid for part {self.part.value}"
            )
        if self.part is not Part.A and self.entity_count != 3:
            raise ValueError(f"part {self.part.value} items must have 3 entities")
        if not 0 <= self.digit_length <= 16:
            raise ValueError(f"digit_length out of range: {self.digit_length}")
        if not 1 <= self.entity_count <= 6:
            raise ValueError(f"entity_count out of range: {self.entity_count}")
        if not self.base_table_id:
            object.__setattr__(self, "base_table_id", self.table_id)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "table_id": self.table_id,
            "chart_type": self.chart_type.value,
            "part": self.part.value,
            "digit_length": self.digit_length,
            "entity_count": self.entity_count,
            "condition": self.condition.value,
            "axis": self.axis.to_dict(),
            "image_ref": self.image_ref,
            "base_table_id": self.base_table_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkItem":
        return cls(
            item_id=d["item_id"],
            table_id=d["table_id"],
            chart_type=ChartType(d["chart_type"]),
            part=Part(d["part"]),
            digit_length=int(d["digit_length"]),
            entity_count=int(d["entity_count"]),
            condition=Condition(d["condition"]),
            axis=AxisSpec.from_dict(d["axis"]),
            image_ref=d.get("image_ref", ""),
            base_table_id=d.get("base_table_id", ""),
        )
