"""Deterministic benchmark generation.

Four subsets, each isolating one y-axis property:

* Part A: 10 base tables per entity count 1-6, cell values on a two-decimal
  grid in [1, 10), scaled by powers of ten to every digit length 0-16.
  1,020 tables, rendered as line, dot and bar charts (3,060 images), all
  with 6 plain-format major ticks starting at 0.
* Part B: the 170 three-entity tables re-axised with 3 and 11 major ticks.
* Part C: value-range variants of those tables — shifted up or down by
  three major intervals (positive / negative axis minimum) or with the
  axis maximum doubled (data squeezed to the bottom).
* Part D: tick labels re-formatted with comma grouping, scientific
  notation, or K/M/B/T abbreviations.

Generation is a pure function of the config: identical seeds give
byte-identical manifests.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .tables import (
    CONDITION_FORMATS,
    AxisSpec,
    BenchmarkItem,
    ChartType,
    Condition,
    DataTable,
    Part,
    SCHEMA_VERSION,
    TickFormat,
    digit_length,
)

#: Mantissas allowed for the axis maximum ("nice numbers").
NICE_MANTISSAS = (Fraction(1), Fraction(2), Fraction(5, 2), Fraction(5))

DEFAULT_ENTITY_NAMES = ("Entity 1", "Entity 2", "Entity 3", "Entity 4", "Entity 5", "Entity 6")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class GenConfig:
    seed: int = 0
    tables_per_entity_count: int = 10
    entity_counts: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    digit_lengths: tuple[int, ...] = tuple(range(17))
    x_category_count: int = 4
    x_category_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.tables_per_entity_count < 1:
            raise ConfigError("tables_per_entity_count must be >= 1")
        if not self.entity_counts or len(set(self.entity_counts)) != len(self.entity_counts):
            raise ConfigError("entity_counts must be non-empty and unique")
        if any(not 1 <= e <= 6 for e in self.entity_counts):
            raise ConfigError("entity counts must lie in 1..6")
        if not self.digit_lengths or len(set(self.digit_lengths)) != len(self.digit_lengths):
            raise ConfigError("digit_lengths must be non-empty and unique")
        if any(not 0 <= d <= 16 for d in self.digit_lengths):
            raise ConfigError("digit lengths must lie in 0..16")
        if self.x_category_count < 2:
            raise ConfigError("need at least two x categories")
        if not self.x_category_labels:
            object.__setattr__(
                self,
                "x_category_labels",
                tuple(str(2018 + i) for i in range(self.x_category_count)),
            )
        elif len(self.x_category_labels) != self.x_category_count:
            raise ConfigError("x_category_labels length must equal x_category_count")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tables_per_entity_count": self.tables_per_entity_count,
            "entity_counts": list(self.entity_counts),
            "digit_lengths": list(self.digit_lengths),
            "x_category_count": self.x_category_count,
            "x_category_labels": list(self.x_category_labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(
            seed=int(d.get("seed", 0)),
            tables_per_entity_count=int(d.get("tables_per_entity_count", 10)),
            entity_counts=tuple(d.get("entity_counts", range(1, 7))),
            digit_lengths=tuple(d.get("digit_lengths", range(17))),
            x_category_count=int(d.get("x_category_count", 4)),
            x_category_labels=tuple(d.get("x_category_labels", ())),
        )


def generate_base_tables(config: GenConfig) -> list[DataTable]:
    """The digit-length-1 source tables: every cell on the two-decimal grid
    [1.00, 9.99], drawn from a per-table seeded stream.

    The two-decimal grid (rather than raw uniform floats) keeps both the
    digit-length labels and the tick round-trip guarantees exact under
    binary floating point.
    """
    tables = []
    for e in sorted(config.entity_counts):
        for i in range(config.tables_per_entity_count):
            rng = random.Random(f"{config.seed}/e{e}/t{i}")
            cells = [
                [rng.randint(100, 999) / 100 for _ in range(e)]
                for _ in range(config.x_category_count)
            ]
            tables.append(
                DataTable.build(
                    f"e{e}t{i:02d}",
                    config.x_category_labels,
                    DEFAULT_ENTITY_NAMES[:e],
                    cells,
                )
            )
    return tables


def scale_table(table: DataTable, target_dl: int) -> DataTable:
    """Scale a digit-length-1 table so every cell has digit length
    *target_dl* (multiply by 10^(target_dl - 1))."""
    if not 0 <= target_dl <= 16:
        raise ValueError(f"target digit length out of range: {target_dl}")
    for row in table.cells:
        for v in row:
            if v is None or digit_length(v) != 1:
                raise ValueError(
                    f"scale_table requires digit-length-1 cells, got {v!r} in {table.id!r}"
                )
    if target_dl == 0:
        scaled = [[v / 10.0 for v in row] for row in table.cells]
    else:
        factor = 10.0 ** (target_dl - 1)
        scaled = [[v * factor for v in row] for row in table.cells]
    return DataTable.build(
        f"{table.id}d{target_dl:02d}", table.row_headers, table.col_headers, scaled
    )


def _nice_ceiling_frac(x: float) -> Fraction:
    """Smallest m * 10^k >= x with mantissa m in NICE_MANTISSAS, exactly.

    Candidates are scanned in ascending value order, so the result is
    deterministic and minimal; comparisons run in rational arithmetic so
    binary-float representation error cannot flip the choice.
    """
    if not x > 0:
        raise ValueError(f"nice_ceiling requires a positive value, got {x!r}")
    exact = Fraction(x)
    k = math.floor(math.log10(x)) - 1
    while True:
        base = Fraction(10) ** k
        for m in NICE_MANTISSAS:
            candidate = m * base
            if candidate >= exact:
                return candidate
        k += 1


def nice_ceiling(x: float) -> float:
    return float(_nice_ceiling_frac(x))


def _axis_from_grid(
    top: Fraction, n: int, format: TickFormat, offset: Fraction = Fraction(0)
) -> AxisSpec:
    # every tick is a single float rounding of its exact rational value, so
    # labels come out clean ("0.6", not "0.6000000000000001")
    ticks = tuple(float(top * j / (n - 1) + offset) for j in range(n))
    interval = float(top / (n - 1))
    return AxisSpec(ticks, interval, interval / 5, format, n)


def derive_axis(
    table: DataTable, n_major_ticks: int = 6, format: TickFormat = TickFormat.PLAIN
) -> AxisSpec:
    """Axis for a base table: ticks from 0 to the nice ceiling of the
    largest cell, equally spaced."""
    if n_major_ticks not in (3, 6, 11):
        raise ValueError(f"unsupported major tick count: {n_major_ticks}")
    max_cell = table.max_cell()
    if max_cell <= 0:
        raise ValueError(f"cannot derive an axis for all-zero/negative table {table.id!r}")
    return _axis_from_grid(_nice_ceiling_frac(max_cell), n_major_ticks, format)


def shift_range(
    table: DataTable, axis: AxisSpec, variant: Condition
) -> tuple[DataTable, AxisSpec]:
    """Range variants for Part C.

    Pos/Neg shift every cell and tick by +/- three major intervals, so the
    axis minimum becomes positive/negative while all value differences are
    preserved.  Ext leaves the data alone and doubles the axis maximum.
    Only base tables (axis exactly as derived, 6 ticks from 0) are
    accepted; re-shifting a shifted table is an error.
    """
    if variant not in (Condition.POS, Condition.NEG, Condition.EXT):
        raise ValueError(f"not a range variant: {variant!r}")
    expected = derive_axis(table, 6)
    if axis.n_major_ticks != 6 or any(
        abs(a - b) > 1e-9 * max(1.0, abs(expected.max_tick))
        for a, b in zip(axis.tick_values, expected.tick_values)
    ):
        raise ValueError(
            "shift_range requires the unmodified 6-tick axis derived from the table"
        )

    top = _nice_ceiling_frac(table.max_cell())

    if variant is Condition.EXT:
        return table, _axis_from_grid(top * 2, 6, axis.format)

    # three major intervals, exact; cells shift in rational space so the
    # "cells within tick range" ordering survives the one float rounding
    shift = top * 3 / 5
    if variant is Condition.NEG:
        shift = -shift
    suffix = "-pos" if variant is Condition.POS else "-neg"
    shifted = DataTable.build(
        f"{table.id}{suffix}",
        table.row_headers,
        table.col_headers,
        [[float(Fraction(v) + shift) for v in row] for row in table.cells],
    )
    return shifted, _axis_from_grid(top, 6, axis.format, offset=shift)


@dataclass(slots=True)
class Manifest:
    items: list[BenchmarkItem]
    ground_truth: dict[str, DataTable]
    config: GenConfig
    toolkit_version: str = __version__

    def items_for(
        self,
        part: Part | None = None,
        condition: Condition | None = None,
        chart_type: ChartType | None = None,
        digit_lengths: Iterable[int] | None = None,
        entity_counts: Iterable[int] | None = None,
    ) -> list[BenchmarkItem]:
        dls = set(digit_lengths) if digit_lengths is not None else None
        ecs = set(entity_counts) if entity_counts is not None else None
        out = []
        for item in self.items:
            if part is not None and item.part is not part:
                continue
            if condition is not None and item.condition is not condition:
                continue
            if chart_type is not None and item.chart_type is not chart_type:
                continue
            if dls is not None and item.digit_length not in dls:
                continue
            if ecs is not None and item.entity_count not in ecs:
                continue
            out.append(item)
        return out

    def items_by_id(self) -> dict[str, BenchmarkItem]:
        return {item.item_id: item for item in self.items}

    def item_by_id(self, item_id: str) -> BenchmarkItem:
        for item in self.items:
            if item.item_id == item_id:
                return item
        raise KeyError(item_id)

    def derived_table_ids(self) -> list[str]:
        """Ids of the scaled tables (the range-shifted Part C copies carry a
        ``-pos``/``-neg`` suffix and are excluded)."""
        return [tid for tid in self.ground_truth if not tid.endswith(("-pos", "-neg"))]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "toolkit_version": self.toolkit_version,
            "config": self.config.to_dict(),
            "items": [item.to_dict() for item in self.items],
            "ground_truth": {tid: t.to_dict() for tid, t in sorted(self.ground_truth.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        return cls(
            items=[BenchmarkItem.from_dict(x) for x in d["items"]],
            ground_truth={
                tid: DataTable.from_dict(t) for tid, t in d["ground_truth"].items()
            },
            config=GenConfig.from_dict(d["config"]),
            toolkit_version=d.get("toolkit_version", __version__),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Manifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


ALL_PARTS = (Part.A, Part.B, Part.C, Part.D)


def generate_manifest(config: GenConfig, parts: Sequence[Part] = ALL_PARTS) -> Manifest:
    """Build every table and benchmark item for the requested parts.

    The full ground-truth table set is always generated (it is cheap and
    keeps table ids stable); `parts` only controls which items appear.
    """
    parts = tuple(parts)
    base_tables = generate_base_tables(config)
    items: list[BenchmarkItem] = []
    ground_truth: dict[str, DataTable] = {}

    scaled: list[tuple[DataTable, int, int]] = []  # (table, entity_count, dl)
    for base in base_tables:
        e = len(base.col_headers)
        for dl in config.digit_lengths:
            t = scale_table(base, dl)
            ground_truth[t.id] = t
            scaled.append((t, e, dl))

    def add_items(
        part: Part,
        condition: Condition,
        table: DataTable,
        axis: AxisSpec,
        e: int,
        dl: int,
        base_table_id: str,
    ) -> None:
        for chart in ChartType:
            items.append(
                BenchmarkItem(
                    item_id=f"{condition.value}-{table.id}-{chart.value}",
                    table_id=table.id,
                    chart_type=chart,
                    part=part,
                    digit_length=dl,
                    entity_count=e,
                    condition=condition,
                    axis=axis,
                    base_table_id=base_table_id,
                )
            )

    for table, e, dl in scaled:
        axis6 = derive_axis(table, 6)
        if Part.A in parts:
            add_items(Part.A, Condition.BASE, table, axis6, e, dl, table.id)
        if e != 3:
            continue
        if Part.B in parts:
            add_items(Part.B, Condition.TICKS3, table, derive_axis(table, 3), e, dl, table.id)
            add_items(Part.B, Condition.TICKS11, table, derive_axis(table, 11), e, dl, table.id)
        if Part.C in parts:
            for variant in (Condition.POS, Condition.NEG, Condition.EXT):
                shifted, axis = shift_range(table, axis6, variant)
                if shifted.id not in ground_truth:
                    ground_truth[shifted.id] = shifted
                add_items(Part.C, variant, shifted, axis, e, dl, table.id)
        if Part.D in parts:
            for condition, fmt in CONDITION_FORMATS.items():
                axis = replace(axis6, format=fmt)
                add_items(Part.D, condition, table, axis, e, dl, table.id)

    return Manifest(items=items, ground_truth=ground_truth, config=config)
