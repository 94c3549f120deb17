"""Self-contained verification suite.

Each check pins one externally meaningful guarantee of the toolkit —
dataset construction exactness, metric-formula fidelity, statistical-test
correctness — against an independent oracle: exhaustive enumeration for
the matching and the signed-rank test, hand-derived fixtures for the
worked examples, and exact counting for the dataset shape.  The suite
needs no network and finishes on a laptop.

Checks raise AssertionError with a readable message on failure and return
a short detail string on success; `run_checks` wraps them with timing so
both the CLI (`chart2table verify`) and the test suite can drive them.
"""

from __future__ import annotations

import itertools
import json
import random
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import Dimension, aggregate
from .generator import GenConfig, Manifest, generate_manifest
from .metrics import (
    d_rms,
    d_tbe,
    d_tbe_sig,
    match_headers,
    match_values,
    rms_tbe_f1,
    score_tables,
    ses,
)
from .numformat import format_tick, parse_number
from .parsing import to_linearized
from .stats import (
    _average_ranks,
    coefficient_of_variation,
    count_crossings,
    pearson,
    wilcoxon_signed_rank,
)
from .tables import AxisSpec, Condition, DataTable, Part, TickFormat, digit_length

# ---------------------------------------------------------------------------
# oracles


def brute_force_min_cost(cost: np.ndarray) -> Fraction:
    """Exhaustive minimum over all maximal matchings, in exact arithmetic."""
    n, m = cost.shape
    k = min(n, m)
    best: Fraction | None = None
    for rows in itertools.combinations(range(n), k):
        for cols in itertools.permutations(range(m), k):
            total = sum((Fraction(float(cost[i, j])) for i, j in zip(rows, cols)), Fraction(0))
            if best is None or total < best:
                best = total
    assert best is not None
    return best


def exact_pairs_cost(cost: np.ndarray, pairs) -> Fraction:
    return sum((Fraction(float(cost[i, j])) for i, j in pairs), Fraction(0))


def wilcoxon_enumeration_p(x: list[float], y: list[float]) -> float:
    """Two-sided exact p-value by enumerating all sign assignments."""
    diffs = [a - b for a, b in zip(x, y)]
    nonzero = [d for d in diffs if d != 0]
    ranks = _average_ranks([abs(d) for d in nonzero])
    w_obs = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    n = len(nonzero)
    le = ge = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if w <= w_obs:
            le += 1
        if w >= w_obs:
            ge += 1
    return min(1.0, 2 * min(le, ge) / 2**n)


# ---------------------------------------------------------------------------
# shared fixtures

_manifest_cache: Manifest | None = None


def default_manifest() -> Manifest:
    global _manifest_cache
    if _manifest_cache is None:
        _manifest_cache = generate_manifest(GenConfig())
    return _manifest_cache


#: non-negative integer bucket counts with population std/mean ~ 15040.6/8769.5
CV_FIXTURE = [0, 0, 258, 34820]


def two_point_fixture() -> tuple[DataTable, DataTable, AxisSpec]:
    truth = DataTable.build("two-point", ["x0", "x1"], ["Entity 1"], [[600.0], [10000.0]])
    pred = DataTable.build("two-point-pred", ["x0", "x1"], ["Entity 1"], [[400.0], [9800.0]])
    axis = AxisSpec.from_ticks([0, 2000, 4000, 6000, 8000, 10000])
    assert axis.minor_estimate_t == 400.0
    return truth, pred, axis


def _random_table(rng: random.Random, tid: str, n_rows: int, n_cols: int,
                  value_span: float, allow_absent: bool = False) -> DataTable:
    cells = []
    for _ in range(n_rows):
        row = []
        for _ in range(n_cols):
            if allow_absent and rng.random() < 0.08:
                row.append(None)
            else:
                row.append(rng.uniform(-value_span, value_span))
        cells.append(row)
    return DataTable.build(
        tid,
        [f"x{i}" for i in range(n_rows)],
        [f"Entity {j + 1}" for j in range(n_cols)],
        cells,
    )


def _axis_for_t(t: float) -> AxisSpec:
    step = 5 * t
    return AxisSpec.from_ticks([i * step for i in range(6)])


def ground_truth_prediction_lines(manifest: Manifest, items) -> list[str]:
    """Prediction JSONL lines echoing the ground truth in linearized form."""
    lines = []
    for item in items:
        truth = manifest.ground_truth[item.table_id]
        lines.append(json.dumps({
            "item_id": item.item_id,
            "model": "oracle-echo",
            "prompt_variant": "plain",
            "raw_text": to_linearized(truth),
            "timestamp": "1970-01-01T00:00:00+00:00",
        }))
    return lines


# ---------------------------------------------------------------------------
# checks


def check_dataset_counts() -> str:
    m = default_manifest()
    derived = m.derived_table_ids()
    assert len(derived) == 1020, f"expected 1020 derived tables, got {len(derived)}"
    assert len(m.items) == 7140, f"expected 7140 items, got {len(m.items)}"
    part_a = m.items_for(part=Part.A)
    assert len(part_a) == 3060, f"expected 3060 Part A images, got {len(part_a)}"
    referenced = {i.table_id for i in m.items}
    missing = referenced - set(m.ground_truth)
    assert not missing, f"items reference missing tables: {sorted(missing)[:3]}"
    for dl in range(17):
        tables = {i.table_id for i in part_a if i.digit_length == dl}
        images = [i for i in part_a if i.digit_length == dl]
        assert len(tables) == 60, f"digit length {dl}: {len(tables)} tables, expected 60"
        assert len(images) == 180, f"digit length {dl}: {len(images)} images, expected 180"
    return "1020 tables, 3060 + 4080 = 7140 items, 60 tables/180 images per digit length"


def check_count_balance_cv() -> str:
    m = default_manifest()
    part_a = m.items_for(part=Part.A)
    counts = [sum(1 for i in part_a if i.digit_length == dl) for dl in range(17)]
    cv = coefficient_of_variation(counts)
    assert cv == 0.0, f"image counts per digit length are imbalanced: CV={cv}"
    fixture_cv = coefficient_of_variation(CV_FIXTURE)
    assert abs(fixture_cv - 1.72) <= 0.01, f"fixture CV {fixture_cv:.4f} not within 1.72 +/- 0.01"
    return f"benchmark CV=0.00 exactly; skewed fixture CV={fixture_cv:.4f}"


def check_two_point_example() -> str:
    truth, pred, axis = two_point_fixture()
    t = axis.minor_estimate_t
    tbe0 = d_tbe(600, 400, t)
    tbe1 = d_tbe(10000, 9800, t)
    assert tbe0 == 0.5 and tbe1 == 0.5, f"tick errors {tbe0}, {tbe1} != 0.5"
    rel0 = d_rms(600, 400)
    rel1 = d_rms(10000, 9800)
    assert abs(rel0 - 0.33) <= 0.005, f"relative distance at x0: {rel0}"
    assert abs(rel1 - 0.02) <= 0.005, f"relative distance at x1: {rel1}"
    f1 = rms_tbe_f1(truth, pred, axis)
    assert f1 == 0.5, f"two-point rms_tbe_f1 {f1} != 0.5"
    return f"d_tbe=0.5/0.5, d_rms={rel0:.3f}/{rel1:.3f}, rms_tbe_f1=0.5"


def check_metric_bounds() -> str:
    rng = random.Random(20260808)
    n_trials = 10_000
    for trial in range(n_trials):
        t = 10.0 ** rng.uniform(-3, 3)
        axis = _axis_for_t(t)
        n_rows = rng.randint(1, 3)
        n_cols = rng.randint(1, 3)
        truth = _random_table(rng, "truth", n_rows, n_cols, 20 * t)
        if rng.random() < 0.15:
            pred = DataTable.build("pred", truth.row_headers, truth.col_headers,
                                   [list(r) for r in truth.cells])
        else:
            pred = _random_table(rng, "pred", rng.randint(1, 3), rng.randint(1, 3),
                                 20 * t, allow_absent=True)
        rec = score_tables(truth, pred, axis)
        for name in ("rms_f1", "rms_f1_no_header", "rms_tbe_f1", "rms_tbe_f1_sig", "rnss_tbe_f1"):
            v = getattr(rec, name)
            assert 0.0 <= v <= 1.0, f"trial {trial}: {name}={v} out of [0,1]"
        assert -1.0 <= rec.ses <= 1.0, f"trial {trial}: ses={rec.ses}"
        assert rec.tbe_raw >= 0.0, f"trial {trial}: tbe_raw={rec.tbe_raw}"
        assert rec.ses == rec.rnss_tbe_f1 - rec.rms_tbe_f1, f"trial {trial}: ses identity broken"
        if pred.cells == truth.cells and pred.col_headers == truth.col_headers:
            assert rec.rms_tbe_f1 == 1.0, f"trial {trial}: identity prediction scored {rec.rms_tbe_f1}"
        # scale equivariance of the tick-based distances
        g = rng.uniform(-100, 100)
        p = rng.uniform(-100, 100)
        c = 10.0 ** rng.uniform(-6, 6)
        base = d_tbe(g, p, t)
        scaled = d_tbe(c * g, c * p, c * t)
        assert abs(scaled - base) <= 1e-12 * max(1.0, abs(base)), (
            f"trial {trial}: d_tbe not scale-equivariant: {base} vs {scaled}"
        )
        assert d_tbe_sig(c * g, c * p, c * t) == d_tbe_sig(g, p, t)
    return f"{n_trials} randomized triples: bounds, ses identity, equivariance all hold"


def check_matching_oracle() -> str:
    rng = random.Random(42)
    header_pool = ["Entity 1", "Entity 2", "entity 1", "Alpha", "Beta", "B"]
    row_pool = ["2018", "2019", "2020", "x", ""]
    checked = 0
    for trial in range(1000):
        n_rows_t = rng.randint(1, 3)
        n_cols_t = rng.randint(1, 2)
        n_rows_p = rng.randint(1, 3)
        n_cols_p = rng.randint(1, 2)
        if n_rows_t * n_cols_t > 6 or n_rows_p * n_cols_p > 6:
            continue
        t_axis = _axis_for_t(1.0)
        truth = DataTable.build(
            "t", rng.sample(row_pool, n_rows_t), rng.sample(header_pool, n_cols_t),
            [[rng.uniform(-5, 5) for _ in range(n_cols_t)] for _ in range(n_rows_t)],
        )
        pred = DataTable.build(
            "p", rng.sample(row_pool, n_rows_p), rng.sample(header_pool, n_cols_p),
            [[rng.uniform(-5, 5) for _ in range(n_cols_p)] for _ in range(n_rows_p)],
        )
        from .metrics import _header_cost_matrix, flatten

        cost_h = _header_cost_matrix(flatten(pred), flatten(truth))
        align_h = match_headers(truth, pred)
        got_h = exact_pairs_cost(cost_h, align_h.pairs)
        want_h = brute_force_min_cost(cost_h)
        assert got_h == want_h, f"trial {trial}: header matching {got_h} != brute force {want_h}"

        cost_v = np.array([
            [d_tbe(gv, pv, 1.0) for gv in [x for r in truth.cells for x in r]]
            for pv in [x for r in pred.cells for x in r]
        ])
        align_v = match_values(truth, pred, 1.0)
        got_v = exact_pairs_cost(cost_v, align_v.pairs)
        want_v = brute_force_min_cost(cost_v)
        assert got_v == want_v, f"trial {trial}: value matching {got_v} != brute force {want_v}"
        checked += 1
    assert checked >= 900, f"only {checked} fixtures exercised"
    return f"{checked} fixtures: header and value matchings hit the exhaustive minimum exactly"


def check_numformat_round_trip() -> str:
    m = default_manifest()
    ticks = sorted({v for item in m.items for v in item.axis.tick_values})
    n_checked = 0
    for v in ticks:
        for fmt in TickFormat:
            text = format_tick(v, fmt)
            back = parse_number(text)
            tol = 1e-6 * max(1.0, abs(v))
            assert abs(back - v) <= tol, f"{fmt.value}({v}) = {text!r} -> {back}"
            n_checked += 1
    exemplars = [("7,000", 7000.0), ("7.00e+6", 7000000.0), ("7K", 7000.0)]
    for text, want in exemplars:
        got = parse_number(text)
        assert got == want, f"parse({text!r}) = {got}, expected {want}"
    return f"{len(ticks)} distinct ticks x 4 formats round-trip ({n_checked} checks)"


def check_digit_length_labels() -> str:
    # Pos/Neg range shifts change the values on purpose, so the label law
    # covers every condition that leaves cells at their scaled values.
    m = default_manifest()
    n_cells = 0
    for item in m.items:
        if item.condition in (Condition.POS, Condition.NEG):
            continue
        table = m.ground_truth[item.table_id]
        for row in table.cells:
            for v in row:
                assert digit_length(v) == item.digit_length, (
                    f"{item.item_id}: cell {v} has digit length {digit_length(v)}, "
                    f"label says {item.digit_length}"
                )
                n_cells += 1
    return f"{n_cells} cells match their digit-length label exhaustively"


def check_wilcoxon_oracle() -> str:
    rng = random.Random(99)
    n_checked = 0
    while n_checked < 100:
        n = rng.randint(5, 12)
        x = [rng.randint(0, 8) * 0.5 for _ in range(n)]
        y = [rng.randint(0, 8) * 0.5 for _ in range(n)]
        if sum(1 for a, b in zip(x, y) if a != b) < 5:
            continue
        got = wilcoxon_signed_rank(x, y, mode="exact").p_value
        want = wilcoxon_enumeration_p(x, y)
        assert got == want, f"exact p {got} != enumeration {want} on x={x} y={y}"
        n_checked += 1
    worst = 0.0
    for _ in range(25):
        x = [rng.random() for _ in range(25)]
        y = [rng.random() for _ in range(25)]
        e = wilcoxon_signed_rank(x, y, mode="exact").p_value
        a = wilcoxon_signed_rank(x, y, mode="normal").p_value
        worst = max(worst, abs(e - a))
    assert worst <= 0.01, f"normal approximation off by {worst:.4f} at n=25"
    return f"100 samples match enumeration exactly; approx within {worst:.4f} at n=25"


def check_crossing_counts() -> str:
    parallel = DataTable.build("par", ["a", "b"], ["E1", "E2"], [[1, 3], [2, 4]])
    assert count_crossings(parallel) == (0, 0.0)
    crossing = DataTable.build("crs", ["a", "b"], ["E1", "E2"], [[1, 3], [3, 1]])
    total, avg = count_crossings(crossing)
    assert total == 1 and avg == 0.5, f"single-crossing fixture gave {total}, {avg}"

    m = default_manifest()
    by_entities: dict[int, list[float]] = {}
    seen: set[str] = set()
    for item in m.items_for(part=Part.A):
        if item.table_id in seen or item.entity_count < 2:
            continue
        seen.add(item.table_id)
        _, per_entity = count_crossings(m.ground_truth[item.table_id])
        by_entities.setdefault(item.entity_count, []).append(per_entity)
    counts = sorted(by_entities)
    means = [sum(by_entities[e]) / len(by_entities[e]) for e in counts]
    for a, b in zip(means, means[1:]):
        assert a < b, f"crossings per entity not strictly increasing: {means}"
    r = pearson([float(e) for e in counts], means)
    assert r > 0.9, f"Pearson(entity count, avg crossings) = {r:.4f} <= 0.9"
    return f"fixtures exact; manifest means {['%.2f' % v for v in means]}, Pearson {r:.4f}"


def check_ses_swap_sensitivity() -> str:
    rng = random.Random(5)
    for trial in range(50):
        t = 10.0 ** rng.uniform(-2, 2)
        axis = _axis_for_t(t)
        n_rows = rng.randint(2, 4)
        n_cols = rng.randint(2, 4)
        # distinct values with pairwise gaps >= t: spaced multiples of 2t
        slots = rng.sample(range(1, 60), n_rows * n_cols)
        cells = [[slots[i * n_cols + j] * 2.0 * t for j in range(n_cols)] for i in range(n_rows)]
        truth = DataTable.build(
            "t", [f"x{i}" for i in range(n_rows)],
            [f"Entity {j + 1}" for j in range(n_cols)], cells,
        )
        exact = DataTable.build("p0", truth.row_headers, truth.col_headers,
                                [list(r) for r in truth.cells])
        assert ses(truth, exact, axis) == 0.0, f"trial {trial}: exact prediction has non-zero ses"
        # cyclic entity shift: every value lands on the wrong entity
        swapped_cells = [[row[(j + 1) % n_cols] for j in range(n_cols)] for row in cells]
        swapped = DataTable.build("p1", truth.row_headers, truth.col_headers, swapped_cells)
        s = ses(truth, swapped, axis)
        assert s >= 0.9, f"trial {trial}: swapped-entity ses {s} < 0.9"
    return "50 fixtures: ses=0 for exact, ses>=0.9 for entity-swapped predictions"


def check_end_to_end_dry_run() -> str:
    from click.testing import CliRunner

    from .cli import main as cli_main

    runner = CliRunner()
    with tempfile.TemporaryDirectory(prefix="chart2table-verify-") as tmp:
        tmp_path = Path(tmp)
        res = runner.invoke(cli_main, ["generate", "--out-dir", str(tmp_path)])
        assert res.exit_code == 0, f"generate failed: {res.output}"
        assert "tables=1020 items=7140" in res.output, res.output

        manifest_path = tmp_path / "manifest.json"
        res = runner.invoke(cli_main, [
            "render", "--manifest", str(manifest_path),
            "--out-dir", str(tmp_path / "images"),
            "--filter", "part=A,digit_length=0..2",
        ])
        assert res.exit_code == 0, f"render failed: {res.output}"
        n_images = len(list((tmp_path / "images").glob("*.png")))
        assert n_images == 540, f"expected 540 images (3 digit lengths), got {n_images}"

        manifest = Manifest.load(manifest_path)
        items = manifest.items_for(part=Part.A, digit_lengths=range(3))
        preds_path = tmp_path / "predictions.jsonl"
        preds_path.write_text(
            "\n".join(ground_truth_prediction_lines(manifest, items)) + "\n", encoding="utf-8"
        )
        res = runner.invoke(cli_main, [
            "score", "--manifest", str(manifest_path),
            "--predictions", str(preds_path),
            "--out", str(tmp_path / "scores"),
        ])
        assert res.exit_code == 0, f"score failed: {res.output}"

        res = runner.invoke(cli_main, [
            "analyze", "--manifest", str(manifest_path),
            "--scores", str(tmp_path / "scores.jsonl"),
            "--out-dir", str(tmp_path / "reports"),
        ])
        assert res.exit_code == 0, f"analyze failed: {res.output}"

        from .cli import read_scores

        scores = read_scores(tmp_path / "scores.jsonl")
        by_id = manifest.items_by_id()
        n_groups = 0
        for dim in Dimension:
            for group, row in aggregate(scores, by_id, dim).items():
                assert row["rms_tbe_f1"] == 100.0, (
                    f"{dim.value}={group}: mean rms_tbe_f1 {row['rms_tbe_f1']} != 100.0"
                )
                n_groups += 1
        return f"540 images rendered, {len(scores)} scored, {n_groups} groups all at 100.0"


@dataclass(slots=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


CHECKS: dict[str, Callable[[], str]] = {
    "dataset-counts": check_dataset_counts,
    "count-balance-cv": check_count_balance_cv,
    "two-point-example": check_two_point_example,
    "metric-bounds-and-identities": check_metric_bounds,
    "matching-brute-force-oracle": check_matching_oracle,
    "numformat-round-trip": check_numformat_round_trip,
    "digit-length-labels": check_digit_length_labels,
    "wilcoxon-exact-oracle": check_wilcoxon_oracle,
    "crossing-counts": check_crossing_counts,
    "ses-swap-sensitivity": check_ses_swap_sensitivity,
    "end-to-end-dry-run": check_end_to_end_dry_run,
}


def run_checks(names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if names is not None and name not in names:
            continue
        start = time.perf_counter()
        try:
            detail = fn() or ""
            passed = True
        except AssertionError as exc:
            detail = str(exc)
            passed = False
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
    return results
