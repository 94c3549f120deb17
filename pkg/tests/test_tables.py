import pytest
from hypothesis import given, strategies as st

from chart2table.tables import (
    AxisSpec,
    BenchmarkItem,
    ChartType,
    Condition,
    DataTable,
    Part,
    TickFormat,
    digit_length,
    validate_table,
)


class TestDigitLength:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.5, 0),       # anything in (-1, 1) has zero digit length
            (7000, 4),
            (-250, 3),      # sign is ignored
            (1.0, 1),       # boundary: 10^0 <= 1 < 10^1
            (0.0, 0),
            (9.999, 1),
            (10.0, 2),
            (999.999, 3),
            (1e16, 17),
            (-0.999, 0),
        ],
    )
    def test_examples(self, value, expected):
        assert digit_length(value) == expected

    @pytest.mark.parametrize("bad", [float("inf"), float("-inf"), float("nan")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            digit_length(bad)

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_sign_invariance(self, x):
        assert digit_length(x) == digit_length(-x) == digit_length(abs(x))

    @given(
        st.floats(min_value=1.0, max_value=10.0, exclude_max=True),
        st.integers(min_value=0, max_value=16),
    )
    def test_scaling_law(self, x, d):
        assert digit_length(x) == 1
        scaled = x / 10.0 if d == 0 else x * 10.0 ** (d - 1)
        assert digit_length(scaled) == d

    @given(
        st.floats(min_value=0, max_value=1e18, allow_nan=False),
        st.floats(min_value=0, max_value=1e18, allow_nan=False),
    )
    def test_monotone_in_magnitude(self, a, b):
        lo, hi = sorted([a, b])
        assert digit_length(lo) <= digit_length(hi)


class TestValidateTable:
    def make(self, cells, rows=("r0", "r1", "r2"), cols=("A", "B", "C")):
        return DataTable.build("t", rows[: len(cells)], cols, cells)

    def test_well_formed_is_clean(self):
        t = self.make([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert validate_table(t) == []

    def test_ragged_row(self):
        t = DataTable("t", ("r0", "r1"), ("A", "B"), ((1.0, 2.0), (3.0,)))
        report = validate_table(t)
        assert len(report) == 1 and "ragged" in report[0]

    def test_duplicate_entity_name(self):
        t = DataTable.build("t", ["r0"], ["A", "A"], [[1, 2]])
        report = validate_table(t)
        assert any("duplicate header" in v for v in report)

    def test_non_finite_and_absent_cells(self):
        t = DataTable("t", ("r0",), ("A", "B"), ((float("nan"), None),))
        report = validate_table(t)
        assert any("non-finite" in v for v in report)
        assert any("absent" in v for v in report)

    def test_row_header_count_mismatch(self):
        t = DataTable("t", ("r0", "r1"), ("A",), ((1.0,),))
        assert any("row count" in v for v in validate_table(t))


class TestDataTable:
    def test_json_round_trip_with_absent_cells(self):
        t = DataTable.build("id1", ["2018", "2019"], ["A", "B"], [[1.5, None], [2.0, 3.25]])
        back = DataTable.from_json(t.to_json())
        assert back == t
        assert back.cells[0][1] is None

    def test_max_cell_ignores_absent(self):
        t = DataTable.build("t", ["r"], ["A", "B"], [[None, 4.0]])
        assert t.max_cell() == 4.0

    def test_max_cell_empty_raises(self):
        t = DataTable.build("t", [], [], [])
        with pytest.raises(ValueError):
            t.max_cell()


class TestAxisSpec:
    def test_from_ticks(self):
        ax = AxisSpec.from_ticks([0, 2, 4, 6, 8, 10])
        assert ax.major_interval == 2
        assert ax.minor_estimate_t == 0.4
        assert ax.n_major_ticks == 6

    def test_unequal_spacing_rejected(self):
        with pytest.raises(ValueError, match="spacing"):
            AxisSpec((0.0, 1.0, 3.0), 1.0, 0.2, TickFormat.PLAIN, 3)

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            AxisSpec((0.0, 0.0, 1.0), 0.5, 0.1, TickFormat.PLAIN, 3)

    def test_minor_estimate_must_be_fifth(self):
        with pytest.raises(ValueError, match="minor_estimate_t"):
            AxisSpec((0.0, 1.0, 2.0), 1.0, 0.5, TickFormat.PLAIN, 3)

    def test_tick_count_mismatch(self):
        with pytest.raises(ValueError, match="ticks"):
            AxisSpec((0.0, 1.0), 1.0, 0.2, TickFormat.PLAIN, 3)

    def test_dict_round_trip(self):
        ax = AxisSpec.from_ticks([-0.6, -0.4, -0.2, 0.0, 0.2, 0.4], TickFormat.SCIENTIFIC)
        assert AxisSpec.from_dict(ax.to_dict()) == ax


class TestBenchmarkItem:
    def axis(self):
        return AxisSpec.from_ticks([0, 2, 4, 6, 8, 10])

    def make(self, **kw):
        defaults = dict(
            item_id="base-e3t00d01-line",
            table_id="e3t00d01",
            chart_type=ChartType.LINE,
            part=Part.A,
            digit_length=1,
            entity_count=3,
            condition=Condition.BASE,
            axis=self.axis(),
        )
        defaults.update(kw)
        return BenchmarkItem(**defaults)

    def test_base_table_id_defaults_to_table_id(self):
        assert self.make().base_table_id == "e3t00d01"

    def test_condition_part_mismatch(self):
        with pytest.raises(ValueError, match="condition"):
            self.make(part=Part.B, condition=Condition.BASE)

    def test_non_part_a_requires_three_entities(self):
        with pytest.raises(ValueError, match="3 entities"):
            self.make(part=Part.B, condition=Condition.TICKS3, entity_count=2)

    def test_dict_round_trip(self):
        item = self.make(part=Part.D, condition=Condition.SCI)
        assert BenchmarkItem.from_dict(item.to_dict()) == item
