"""Deterministic chart rendering (line, dot, bar) to PNG.

Every visual element is standardized by :class:`StyleSpec` so that the only
thing varying across benchmark items is the data and the y-axis condition
under study.  Each render also produces a metadata sidecar carrying the
exact tick label strings and the pixel coordinates of every datapoint,
which lets tests verify label fidelity and axis geometry without OCR.

Rendering is pure: the same (item, table, style) yields byte-identical PNG
output on a given platform (fonts are resolved to the DejaVu family that
ships with matplotlib).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, replace
from pathlib import Path

import matplotlib
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .generator import Manifest
from .numformat import format_tick
from .tables import BenchmarkItem, ChartType, DataTable


@dataclass(frozen=True, slots=True)
class StyleSpec:
    width: int = 640
    height: int = 480
    font_family: str = "DejaVu Sans"
    font_size: float = 10.0
    palette: tuple[str, ...] = (
        "#1f77b4",
        "#ff7f0e",
        "#2ca02c",
        "#d62728",
        "#9467bd",
        "#8c564b",
    )
    legend_above: bool = True
    grid: bool = True
    dpi_scale: float = 1.0
    title: str = "Values by Year"
    x_label: str = "Year"
    y_label: str = "Value"

    def __post_init__(self) -> None:
        if len(set(self.palette)) != len(self.palette):
            raise ValueError("palette colors must be pairwise distinct")
        if len(self.palette) < 6:
            raise ValueError("palette needs at least six colors")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "font_family": self.font_family,
            "font_size": self.font_size,
            "palette": list(self.palette),
            "legend_above": self.legend_above,
            "grid": self.grid,
            "dpi_scale": self.dpi_scale,
            "title": self.title,
            "x_label": self.x_label,
            "y_label": self.y_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StyleSpec":
        known = {f: d[f] for f in d if f in cls.__dataclass_fields__}
        if "palette" in known:
            known["palette"] = tuple(known["palette"])
        return cls(**known)

    @classmethod
    def load(cls, path: str | Path) -> "StyleSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class RenderError(RuntimeError):
    pass


class RenderBatchError(RenderError):
    """Raised when a manifest render only partially completed; rerunning
    resumes by skipping images that already exist."""

    def __init__(self, written: int, failures: dict[str, str]):
        super().__init__(f"{len(failures)} items failed after writing {written} images")
        self.written = written
        self.failures = failures


def _rc_params(style: StyleSpec) -> dict:
    return {
        "font.family": style.font_family,
        "font.size": style.font_size,
        "axes.grid": style.grid,
        "grid.alpha": 0.4,
        "svg.hashsalt": "chart2table",
        "figure.max_open_warning": 0,
    }


def render_with_metadata(
    item: BenchmarkItem, table: DataTable, style: StyleSpec | None = None
) -> tuple[bytes, dict]:
    """Render one chart; returns (png_bytes, sidecar_metadata)."""
    style = style or StyleSpec()
    if len(table.col_headers) > len(style.palette):
        raise RenderError(
            f"palette has {len(style.palette)} colors for {len(table.col_headers)} entities"
        )
    axis = item.axis
    lo, hi = axis.min_tick, axis.max_tick
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))  # sub-pixel slack for float dust
    for row in table.cells:
        for v in row:
            if v is None or not (lo - tol <= v <= hi + tol):
                raise RenderError(
                    f"cell {v!r} of table {table.id!r} is outside the tick range "
                    f"[{lo}, {hi}] (axis derivation bug upstream)"
                )

    n_rows = len(table.row_headers)
    n_entities = len(table.col_headers)
    xs = list(range(n_rows))
    dpi = 100.0 * style.dpi_scale

    with matplotlib.rc_context(_rc_params(style)):
        fig = Figure(figsize=(style.width / 100.0, style.height / 100.0), dpi=dpi)
        canvas = FigureCanvasAgg(fig)
        ax = fig.add_axes((0.16, 0.11, 0.78, 0.72))

        bar_group_width = 0.8
        for j, name in enumerate(table.col_headers):
            ys = [row[j] for row in table.cells]
            color = style.palette[j]
            if item.chart_type is ChartType.LINE:
                ax.plot(xs, ys, color=color, label=name, linewidth=2.0)
            elif item.chart_type is ChartType.DOT:
                ax.plot(
                    xs, ys, color=color, label=name, linestyle="none",
                    marker="o", markersize=7.0,
                )
            elif item.chart_type is ChartType.BAR:
                w = bar_group_width / n_entities
                offs = [x - bar_group_width / 2 + (j + 0.5) * w for x in xs]
                ax.bar(offs, ys, width=w, color=color, label=name)
            else:
                raise RenderError(f"unsupported chart type {item.chart_type!r}")

        tick_labels = [format_tick(v, axis.format) for v in axis.tick_values]
        ax.set_yticks(list(axis.tick_values), labels=tick_labels)
        ax.set_ylim(lo, hi)
        ax.set_xticks(xs, labels=list(table.row_headers))
        ax.set_xlim(-0.6, n_rows - 0.4)
        ax.set_xlabel(style.x_label)
        ax.set_ylabel(style.y_label)
        ax.set_title(style.title, pad=32.0)
        if style.legend_above:
            ax.legend(
                loc="lower center", bbox_to_anchor=(0.5, 1.005),
                ncols=min(n_entities, 6), frameon=False, borderaxespad=0.0,
            )
        else:
            ax.legend(loc="upper right")

        canvas.draw()
        height_px = style.height * style.dpi_scale

        def to_png_xy(x: float, y: float) -> tuple[float, float]:
            dx, dy = ax.transData.transform((x, y))
            return float(dx), float(height_px - dy)

        # the y-axis pixel transform is affine; record it from two probes
        _, y0 = to_png_xy(0.0, lo)
        _, y1 = to_png_xy(0.0, hi)
        scale = (y1 - y0) / (hi - lo)
        series_meta = []
        for j, name in enumerate(table.col_headers):
            points = []
            for i in range(n_rows):
                v = table.cells[i][j]
                px, py = to_png_xy(i, v)
                points.append({"x_index": i, "value": v, "px": px, "py": py})
            series_meta.append(
                {"name": name, "color": style.palette[j], "points": points}
            )

        buf = io.BytesIO()
        fig.savefig(buf, format="png", metadata={"Software": None})
        png = buf.getvalue()

    meta = {
        "item_id": item.item_id,
        "table_id": table.id,
        "chart_type": item.chart_type.value,
        "width_px": int(style.width * style.dpi_scale),
        "height_px": int(height_px),
        "tick_values": list(axis.tick_values),
        "tick_labels": tick_labels,
        "tick_format": axis.format.value,
        "y_transform": {"scale": scale, "offset": y0 - scale * lo},
        "series": series_meta,
        "style": style.to_dict(),
    }
    return png, meta


def render(item: BenchmarkItem, table: DataTable, style: StyleSpec | None = None) -> bytes:
    """Render one chart to PNG bytes."""
    png, _ = render_with_metadata(item, table, style)
    return png


def render_manifest(
    manifest: Manifest,
    style: StyleSpec | None = None,
    out_dir: str | Path = ".",
    items: list[BenchmarkItem] | None = None,
    progress=None,
) -> int:
    """Render every item (or the given subset) into *out_dir*.

    Existing files are skipped, so an interrupted run resumes where it
    stopped.  Item ``image_ref`` fields are updated in place on the
    manifest.  Returns the number of images written by this call.
    """
    style = style or StyleSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    todo = items if items is not None else list(manifest.items)
    index = {item.item_id: pos for pos, item in enumerate(manifest.items)}
    written = 0
    failures: dict[str, str] = {}
    for item in todo:
        png_path = out / f"{item.item_id}.png"
        ref = str(png_path)
        if item.image_ref != ref:
            manifest.items[index[item.item_id]] = replace(item, image_ref=ref)
        if png_path.exists():
            continue
        table = manifest.ground_truth[item.table_id]
        try:
            png, meta = render_with_metadata(item, table, style)
            png_path.write_bytes(png)
            (out / f"{item.item_id}.meta.json").write_text(
                json.dumps(meta, sort_keys=True), encoding="utf-8"
            )
        except OSError as exc:
            failures[item.item_id] = str(exc)
            continue
        written += 1
        if progress is not None:
            progress(item.item_id, written)
    if failures:
        raise RenderBatchError(written, failures)
    return written
