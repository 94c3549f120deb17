"""Score aggregation, paired condition comparisons, and report emission.

Scores are grouped along one bias dimension at a time (digit length,
entity count, major tick count, range variant, tick format, chart type)
and averaged; bounded metrics are reported as percentages.  Condition
comparisons pair each chart with its base-configuration twin (same
underlying table, same chart type) and run the paired two-sided Wilcoxon
signed-rank test.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .metrics import ScoreRecord
from .stats import DEFAULT_ALPHA, Direction, TestResult, wilcoxon_signed_rank
from .tables import BenchmarkItem, Condition, Part

log = logging.getLogger(__name__)


class Dimension(str, Enum):
    DIGIT_LENGTH = "digit_length"
    ENTITY_COUNT = "entity_count"
    MAJOR_TICKS = "major_ticks"
    RANGE_VARIANT = "range_variant"
    FORMAT = "format"
    CHART_TYPE = "chart_type"


_RANGE_ORDER = ("base", "pos", "neg", "ext")
_FORMAT_ORDER = ("plain", "comma", "sci", "abbr")
_CHART_ORDER = ("line", "dot", "bar")


def group_value(item: BenchmarkItem, dimension: Dimension):
    """The group an item belongs to along *dimension*."""
    if dimension is Dimension.DIGIT_LENGTH:
        return item.digit_length
    if dimension is Dimension.ENTITY_COUNT:
        return item.entity_count
    if dimension is Dimension.MAJOR_TICKS:
        return item.axis.n_major_ticks
    if dimension is Dimension.RANGE_VARIANT:
        return item.condition.value if item.part is Part.C else "base"
    if dimension is Dimension.FORMAT:
        return item.condition.value if item.part is Part.D else "plain"
    if dimension is Dimension.CHART_TYPE:
        return item.chart_type.value
    raise ValueError(f"unknown dimension {dimension!r}")


def _group_order(dimension: Dimension) -> tuple | None:
    if dimension is Dimension.RANGE_VARIANT:
        return _RANGE_ORDER
    if dimension is Dimension.FORMAT:
        return _FORMAT_ORDER
    if dimension is Dimension.CHART_TYPE:
        return _CHART_ORDER
    return None  # numeric dimensions sort naturally


@dataclass(frozen=True, slots=True)
class GroupKey:
    dimension: Dimension
    value: object

    def __post_init__(self) -> None:
        legal = {
            Dimension.DIGIT_LENGTH: set(range(17)),
            Dimension.ENTITY_COUNT: set(range(1, 7)),
            Dimension.MAJOR_TICKS: {3, 6, 11},
            Dimension.RANGE_VARIANT: set(_RANGE_ORDER),
            Dimension.FORMAT: set(_FORMAT_ORDER),
            Dimension.CHART_TYPE: set(_CHART_ORDER),
        }[self.dimension]
        if self.value not in legal:
            raise ValueError(f"{self.value!r} is not a valid {self.dimension.value} group")


#: Bounded metrics are reported x100; tbe_raw keeps its natural scale.
PERCENT_METRICS = frozenset(ScoreRecord.BOUNDED_FIELDS)


def aggregate(
    scores: list[ScoreRecord],
    items_by_id: dict[str, BenchmarkItem],
    dimension: Dimension,
) -> dict[object, dict[str, float]]:
    """Mean of every metric per group along *dimension*.

    Returns an insertion-ordered mapping group value -> {metric: mean},
    groups in the dimension's natural order; empty groups are simply not
    present (a warning is logged if the score list itself is empty).
    """
    buckets: dict[object, list[ScoreRecord]] = {}
    for score in scores:
        item = items_by_id.get(score.item_id)
        if item is None:
            raise KeyError(f"score references unknown item {score.item_id!r}")
        buckets.setdefault(group_value(item, dimension), []).append(score)
    if not buckets:
        log.warning("no scores to aggregate along %s", dimension.value)
        return {}
    order = _group_order(dimension)
    keys = sorted(buckets) if order is None else [g for g in order if g in buckets]
    out: dict[object, dict[str, float]] = {}
    for g in keys:
        group = buckets[g]
        row: dict[str, float] = {"n_items": float(len(group))}
        for metric in ScoreRecord.METRIC_FIELDS:
            mean = sum(getattr(s, metric) for s in group) / len(group)
            row[metric] = mean * 100 if metric in PERCENT_METRICS else mean
        out[g] = row
    return out


@dataclass(frozen=True, slots=True)
class ComparisonResult:
    model: str
    base_condition: str
    other_condition: str
    metric: str
    test: TestResult

    def to_row(self) -> dict:
        return {
            "model": self.model,
            "base": self.base_condition,
            "other": self.other_condition,
            "metric": self.metric,
            "statistic": self.test.statistic,
            "p_value": self.test.p_value,
            "n_pairs": self.test.n_pairs,
            "n_excluded": self.test.n_excluded,
            "direction": self.test.direction.value,
        }


def compare_conditions(
    scores: list[ScoreRecord],
    items_by_id: dict[str, BenchmarkItem],
    base_condition: Condition,
    other_condition: Condition,
    metric: str = "rms_tbe_f1",
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Paired Wilcoxon test of *metric* between two conditions.

    Charts pair on (base table id, chart type), so range-shifted copies
    pair with their unshifted originals.  Items present under only one
    condition are excluded and counted in ``n_excluded``.  Direction
    follows the mean paired difference (base minus other).
    """
    if metric not in ScoreRecord.METRIC_FIELDS:
        raise ValueError(f"unknown metric {metric!r}")
    base_vals: dict[tuple[str, str], float] = {}
    other_vals: dict[tuple[str, str], float] = {}
    for score in scores:
        item = items_by_id.get(score.item_id)
        if item is None:
            raise KeyError(f"score references unknown item {score.item_id!r}")
        key = (item.base_table_id, item.chart_type.value)
        if item.condition is base_condition:
            base_vals[key] = getattr(score, metric)
        elif item.condition is other_condition:
            other_vals[key] = getattr(score, metric)
    paired = sorted(set(base_vals) & set(other_vals))
    n_excluded = len(set(base_vals) ^ set(other_vals))
    x = [base_vals[k] for k in paired]
    y = [other_vals[k] for k in paired]
    if not paired:
        return TestResult(0.0, 1.0, 0, Direction.NO_DIFFERENCE, "degenerate", n_excluded)
    result = wilcoxon_signed_rank(x, y, alpha=alpha)
    return TestResult(
        result.statistic, result.p_value, result.n_pairs, result.direction,
        result.method, n_excluded,
    )


@dataclass(slots=True)
class AggregateTable:
    model: str
    dimension: Dimension
    rows: dict[object, dict[str, float]]


def _write_aggregate_csv(path: Path, table: AggregateTable) -> None:
    metrics = ["n_items", *ScoreRecord.METRIC_FIELDS]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([table.dimension.value, *metrics])
        for g, row in table.rows.items():
            writer.writerow([g, *[f"{row[m]:.6g}" for m in metrics]])


def _plot_aggregate(path: Path, table: AggregateTable) -> None:
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    fig = Figure(figsize=(7.2, 4.8), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    groups = list(table.rows)
    xs = range(len(groups))
    for metric in ("rms_tbe_f1", "rms_tbe_f1_sig", "rnss_tbe_f1", "rms_f1", "ses"):
        ax.plot(xs, [table.rows[g][metric] for g in groups], marker="o", label=metric)
    ax.set_xticks(list(xs), labels=[str(g) for g in groups])
    ax.set_xlabel(table.dimension.value)
    ax.set_ylabel("mean score (%)")
    ax.set_title(f"{table.model or 'scores'} by {table.dimension.value}")
    ax.grid(alpha=0.4)
    ax.legend(fontsize=8)
    fig.savefig(path, format="png", metadata={"Software": None})


def emit_report(
    aggregates: list[AggregateTable],
    tests: list[ComparisonResult],
    out_dir: str | Path,
    plots: bool = True,
) -> list[Path]:
    """Write per-dimension CSVs (and plots) plus the comparison table.

    Raises ``ValueError`` when there is nothing to report, so callers can
    exit non-zero.
    """
    if not aggregates:
        raise ValueError("no aggregates to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for table in aggregates:
        stem = f"{table.model or 'scores'}__{table.dimension.value}"
        csv_path = out / f"{stem}.csv"
        _write_aggregate_csv(csv_path, table)
        written.append(csv_path)
        if plots:
            png_path = out / f"{stem}.png"
            _plot_aggregate(png_path, table)
            written.append(png_path)
    if tests:
        cmp_path = out / "comparisons.csv"
        with cmp_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(tests[0].to_row()))
            writer.writeheader()
            for t in tests:
                writer.writerow(t.to_row())
        written.append(cmp_path)
    return written
