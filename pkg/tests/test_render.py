import json

import pytest

from chart2table.generator import GenConfig, generate_manifest
from chart2table.numformat import format_tick
from chart2table.render import RenderError, StyleSpec, render, render_manifest, render_with_metadata
from chart2table.tables import AxisSpec, BenchmarkItem, ChartType, Condition, DataTable, Part

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def small_manifest():
    return generate_manifest(
        GenConfig(tables_per_entity_count=1, entity_counts=(1, 3), digit_lengths=(0, 1, 4))
    )


def pick(manifest, **kw):
    items = manifest.items_for(**kw)
    assert items
    return items[0]


class TestRender:
    def test_png_bytes(self, small_manifest):
        item = pick(small_manifest, part=Part.A)
        png = render(item, small_manifest.ground_truth[item.table_id])
        assert png.startswith(PNG_MAGIC)

    def test_deterministic_bytes(self, small_manifest):
        item = pick(small_manifest, part=Part.A, chart_type=ChartType.BAR)
        table = small_manifest.ground_truth[item.table_id]
        assert render(item, table) == render(item, table)

    @pytest.mark.parametrize("chart", list(ChartType))
    def test_all_chart_types(self, small_manifest, chart):
        item = pick(small_manifest, part=Part.A, chart_type=chart, entity_counts=[3])
        png, meta = render_with_metadata(item, small_manifest.ground_truth[item.table_id])
        assert png.startswith(PNG_MAGIC)
        assert len(meta["series"]) == 3
        assert all(len(s["points"]) == 4 for s in meta["series"])

    def test_tick_labels_match_format_rule(self, small_manifest):
        for condition in (Condition.BASE, Condition.SCI, Condition.ABBR, Condition.COMMA):
            item = pick(small_manifest, condition=condition)
            _, meta = render_with_metadata(item, small_manifest.ground_truth[item.table_id])
            expected = [format_tick(v, item.axis.format) for v in item.axis.tick_values]
            assert meta["tick_labels"] == expected

    def test_pixel_geometry_is_affine_in_value(self, small_manifest):
        item = pick(small_manifest, part=Part.A, entity_counts=[3])
        _, meta = render_with_metadata(item, small_manifest.ground_truth[item.table_id])
        tr = meta["y_transform"]
        for series in meta["series"]:
            for p in series["points"]:
                assert p["py"] == pytest.approx(tr["offset"] + tr["scale"] * p["value"], abs=1e-6)

    def test_series_colors_follow_palette(self, small_manifest):
        style = StyleSpec()
        item = pick(small_manifest, part=Part.A, entity_counts=[3])
        _, meta = render_with_metadata(item, small_manifest.ground_truth[item.table_id], style)
        assert [s["color"] for s in meta["series"]] == list(style.palette[:3])

    def test_out_of_range_cell_rejected(self):
        table = DataTable.build("t", ["a", "b"], ["E1"], [[5.0], [50.0]])
        axis = AxisSpec.from_ticks([0, 2, 4, 6, 8, 10])
        item = BenchmarkItem(
            item_id="x", table_id="t", chart_type=ChartType.LINE, part=Part.A,
            digit_length=1, entity_count=1, condition=Condition.BASE, axis=axis,
        )
        with pytest.raises(RenderError, match="outside the tick range"):
            render(item, table)

    def test_short_palette_rejected(self):
        with pytest.raises(ValueError, match="six colors"):
            StyleSpec(palette=("#111111", "#222222"))

    def test_dpi_scale_scales_pixels(self, small_manifest):
        item = pick(small_manifest, part=Part.A)
        table = small_manifest.ground_truth[item.table_id]
        _, meta = render_with_metadata(item, table, StyleSpec(dpi_scale=2.0))
        assert meta["width_px"] == 1280 and meta["height_px"] == 960


class TestStyleSpec:
    def test_duplicate_palette_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            StyleSpec(palette=("#111111",) * 6)

    def test_file_round_trip(self, tmp_path):
        style = StyleSpec(width=800, grid=False)
        path = tmp_path / "style.json"
        path.write_text(json.dumps(style.to_dict()), encoding="utf-8")
        assert StyleSpec.load(path) == style


class TestRenderManifest:
    def test_writes_images_and_sidecars(self, small_manifest, tmp_path):
        items = small_manifest.items_for(part=Part.A, digit_lengths=[1], chart_type=ChartType.LINE)
        written = render_manifest(small_manifest, None, tmp_path, items=items)
        assert written == len(items) == 2
        pngs = sorted(tmp_path.glob("*.png"))
        metas = sorted(tmp_path.glob("*.meta.json"))
        assert len(pngs) == len(metas) == 2
        meta = json.loads(metas[0].read_text())
        assert meta["tick_labels"]

    def test_resume_skips_existing(self, small_manifest, tmp_path):
        items = small_manifest.items_for(part=Part.A, digit_lengths=[1], chart_type=ChartType.DOT)
        assert render_manifest(small_manifest, None, tmp_path, items=items) == 2
        assert render_manifest(small_manifest, None, tmp_path, items=items) == 0

    def test_updates_image_refs(self, tmp_path):
        manifest = generate_manifest(
            GenConfig(tables_per_entity_count=1, entity_counts=(1,), digit_lengths=(1,)),
        )
        render_manifest(manifest, None, tmp_path, items=manifest.items[:1])
        assert manifest.items[0].image_ref.endswith(f"{manifest.items[0].item_id}.png")

    def test_empty_selection_writes_nothing(self, small_manifest, tmp_path):
        assert render_manifest(small_manifest, None, tmp_path, items=[]) == 0
        assert list(tmp_path.iterdir()) == []
