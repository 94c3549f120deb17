import json
from collections import Counter

import pytest

from chart2table.generator import (
    ConfigError,
    GenConfig,
    Manifest,
    derive_axis,
    generate_base_tables,
    generate_manifest,
    nice_ceiling,
    scale_table,
    shift_range,
)
from chart2table.tables import Condition, DataTable, Part, TickFormat, digit_length


@pytest.fixture(scope="module")
def manifest():
    return generate_manifest(GenConfig())


class TestGenConfig:
    def test_defaults_cover_1020_tables(self):
        cfg = GenConfig()
        total = cfg.tables_per_entity_count * len(cfg.entity_counts) * len(cfg.digit_lengths)
        assert total == 1020

    def test_labels_autofill(self):
        assert GenConfig(x_category_count=3).x_category_labels == ("2018", "2019", "2020")

    @pytest.mark.parametrize(
        "kw",
        [
            dict(tables_per_entity_count=0),
            dict(entity_counts=()),
            dict(entity_counts=(1, 1)),
            dict(entity_counts=(0,)),
            dict(digit_lengths=(17,)),
            dict(x_category_count=1),
            dict(x_category_count=3, x_category_labels=("a",)),
        ],
    )
    def test_invalid_configs_rejected(self, kw):
        with pytest.raises(ConfigError):
            GenConfig(**kw)


class TestGenerateBaseTables:
    def test_sixty_tables_single_digit_values(self):
        tables = generate_base_tables(GenConfig())
        assert len(tables) == 60
        for t in tables:
            for row in t.cells:
                for v in row:
                    assert 1.0 <= v < 10.0
                    assert digit_length(v) == 1

    def test_ten_tables_per_entity_count(self):
        tables = generate_base_tables(GenConfig())
        counts = Counter(len(t.col_headers) for t in tables)
        assert counts == {e: 10 for e in range(1, 7)}

    def test_restricted_entity_counts(self):
        tables = generate_base_tables(GenConfig(entity_counts=(3,)))
        assert len(tables) == 10
        assert all(len(t.col_headers) == 3 for t in tables)

    def test_same_seed_is_byte_identical(self):
        a = generate_base_tables(GenConfig(seed=7))
        b = generate_base_tables(GenConfig(seed=7))
        assert a == b

    def test_different_seed_differs(self):
        a = generate_base_tables(GenConfig(seed=1))
        b = generate_base_tables(GenConfig(seed=2))
        assert a != b


class TestScaleTable:
    def base(self, v=7.3):
        return DataTable.build("b", ["x0"], ["Entity 1"], [[v]])

    def test_scale_up(self):
        assert scale_table(self.base(), 4).cells[0][0] == 7300.0

    def test_scale_to_zero_digits(self):
        assert scale_table(self.base(), 0).cells[0][0] == 0.73

    def test_identity_at_one(self):
        assert scale_table(self.base(), 1).cells[0][0] == 7.3

    def test_id_encodes_target(self):
        assert scale_table(self.base(), 12).id == "bd12"

    def test_requires_single_digit_cells(self):
        with pytest.raises(ValueError, match="digit-length-1"):
            scale_table(self.base(0.5), 3)

    def test_headers_unchanged(self):
        t = scale_table(self.base(), 9)
        assert t.row_headers == ("x0",) and t.col_headers == ("Entity 1",)


class TestDeriveAxis:
    def table(self, max_value):
        return DataTable.build("t", ["a", "b"], ["E"], [[max_value], [1.0]])

    def test_six_ticks_for_single_digit_max(self):
        ax = derive_axis(self.table(9.1), 6)
        assert ax.tick_values == (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
        assert ax.minor_estimate_t == 0.4

    def test_three_ticks(self):
        ax = derive_axis(self.table(9.1), 3)
        assert ax.tick_values == (0.0, 5.0, 10.0)
        assert ax.minor_estimate_t == 1.0

    def test_eleven_ticks(self):
        ax = derive_axis(self.table(9.1), 11)
        assert len(ax.tick_values) == 11
        assert ax.max_tick == 10.0
        assert ax.minor_estimate_t == pytest.approx(0.2)

    def test_boundary_max_is_inclusive(self):
        ax = derive_axis(self.table(10.0), 6)
        assert ax.max_tick == 10.0

    def test_nice_ceiling_scan(self):
        assert nice_ceiling(9.1) == 10.0
        assert nice_ceiling(10.0) == 10.0
        assert nice_ceiling(0.21) == 0.25
        assert nice_ceiling(1.52e3) == 2000.0
        assert nice_ceiling(2.3e3) == 2500.0
        assert nice_ceiling(5.0) == 5.0

    def test_all_zero_table_rejected(self):
        t = DataTable.build("z", ["a"], ["E"], [[0.0]])
        with pytest.raises(ValueError, match="axis"):
            derive_axis(t, 6)

    def test_unsupported_tick_count(self):
        with pytest.raises(ValueError, match="tick count"):
            derive_axis(self.table(5), 7)


class TestShiftRange:
    def setup_method(self):
        self.table = DataTable.build(
            "t", ["a", "b"], ["E1", "E2"], [[9.1, 1.2], [4.0, 7.7]]
        )
        self.axis = derive_axis(self.table, 6)  # ticks 0..10, interval 2

    def test_pos_shift(self):
        shifted, axis = shift_range(self.table, self.axis, Condition.POS)
        assert shifted.cells[0][0] == pytest.approx(15.1)
        assert axis.min_tick == 6.0 > 0
        assert axis.max_tick == 16.0
        assert shifted.id == "t-pos"

    def test_neg_shift(self):
        shifted, axis = shift_range(self.table, self.axis, Condition.NEG)
        assert shifted.cells[0][1] == pytest.approx(-4.8)
        assert axis.min_tick == -6.0 < 0
        assert shifted.id == "t-neg"

    def test_ext_doubles_axis_only(self):
        same, axis = shift_range(self.table, self.axis, Condition.EXT)
        assert same is self.table
        assert axis.max_tick == 20.0
        assert axis.minor_estimate_t == pytest.approx(0.8)
        assert axis.min_tick == 0.0

    def test_differences_preserved(self):
        for variant in (Condition.POS, Condition.NEG):
            shifted, _ = shift_range(self.table, self.axis, variant)
            for r in range(2):
                for c in range(2):
                    for r2 in range(2):
                        for c2 in range(2):
                            want = self.table.cells[r][c] - self.table.cells[r2][c2]
                            got = shifted.cells[r][c] - shifted.cells[r2][c2]
                            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_rejects_already_shifted(self):
        shifted, axis = shift_range(self.table, self.axis, Condition.POS)
        with pytest.raises(ValueError, match="unmodified"):
            shift_range(shifted, axis, Condition.POS)
        _, ext_axis = shift_range(self.table, self.axis, Condition.EXT)
        with pytest.raises(ValueError, match="unmodified"):
            shift_range(self.table, ext_axis, Condition.EXT)

    def test_rejects_non_range_variant(self):
        with pytest.raises(ValueError, match="range variant"):
            shift_range(self.table, self.axis, Condition.COMMA)


class TestGenerateManifest:
    def test_default_counts(self, manifest):
        assert len(manifest.items) == 7140
        by_part = Counter(i.part for i in manifest.items)
        assert by_part[Part.A] == 3060
        assert by_part[Part.B] + by_part[Part.C] + by_part[Part.D] == 4080
        assert len(manifest.derived_table_ids()) == 1020

    def test_item_ids_unique(self, manifest):
        ids = [i.item_id for i in manifest.items]
        assert len(set(ids)) == len(ids)

    def test_condition_membership(self, manifest):
        for item in manifest.items:
            if item.part is Part.A:
                assert item.condition is Condition.BASE
            elif item.part is Part.B:
                assert item.condition in (Condition.TICKS3, Condition.TICKS11)
            elif item.part is Part.C:
                assert item.condition in (Condition.POS, Condition.NEG, Condition.EXT)
            else:
                assert item.condition in (Condition.COMMA, Condition.SCI, Condition.ABBR)

    def test_parts_bcd_have_three_entities(self, manifest):
        assert all(
            i.entity_count == 3 for i in manifest.items if i.part is not Part.A
        )

    def test_part_d_axis_formats(self, manifest):
        fmt_by_condition = {
            Condition.COMMA: TickFormat.COMMA,
            Condition.SCI: TickFormat.SCIENTIFIC,
            Condition.ABBR: TickFormat.ABBREV,
        }
        for item in manifest.items_for(part=Part.D):
            assert item.axis.format is fmt_by_condition[item.condition]

    def test_part_b_tick_counts_share_base_maximum(self, manifest):
        by_table = {}
        for item in manifest.items:
            by_table.setdefault(item.base_table_id, {})[item.condition] = item.axis
        for table_id, axes in by_table.items():
            if Condition.TICKS3 in axes:
                assert axes[Condition.TICKS3].max_tick == axes[Condition.BASE].max_tick
                assert axes[Condition.TICKS11].max_tick == axes[Condition.BASE].max_tick
                assert axes[Condition.TICKS3].n_major_ticks == 3
                assert axes[Condition.TICKS11].n_major_ticks == 11

    def test_ground_truth_covers_every_item(self, manifest):
        for item in manifest.items:
            assert item.table_id in manifest.ground_truth

    def test_cells_within_tick_range(self, manifest):
        for item in manifest.items:
            t = manifest.ground_truth[item.table_id]
            for row in t.cells:
                for v in row:
                    assert item.axis.min_tick <= v <= item.axis.max_tick

    def test_parts_filter(self):
        m = generate_manifest(GenConfig(), parts=[Part.A])
        assert len(m.items) == 3060
        assert all(i.part is Part.A for i in m.items)
        assert len(m.derived_table_ids()) == 1020

    def test_save_load_round_trip(self, manifest, tmp_path):
        path = tmp_path / "manifest.json"
        manifest.save(path)
        back = Manifest.load(path)
        assert back.items == manifest.items
        assert back.ground_truth == manifest.ground_truth
        assert back.config == manifest.config

    def test_save_is_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        generate_manifest(GenConfig(seed=3)).save(p1)
        generate_manifest(GenConfig(seed=3)).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_pos_items_pair_back_to_base_tables(self, manifest):
        pos_items = manifest.items_for(condition=Condition.POS)
        assert len(pos_items) == 510
        for item in pos_items[:20]:
            assert item.base_table_id in manifest.ground_truth
            assert item.table_id == f"{item.base_table_id}-pos"
