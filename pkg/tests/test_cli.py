import csv
import json

import pytest
from click.testing import CliRunner

from chart2table.cli import main, parse_filter, read_scores
from chart2table.generator import GenConfig, Manifest, generate_manifest
from chart2table.parsing import to_linearized
from chart2table.tables import ChartType, Part


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A small generated-and-rendered workspace shared by pipeline tests."""
    root = tmp_path_factory.mktemp("ws")
    manifest = generate_manifest(
        GenConfig(tables_per_entity_count=1, entity_counts=(1, 3), digit_lengths=(0, 1))
    )
    manifest.save(root / "manifest.json")
    return root


def gt_predictions(manifest, items, path, model="echo"):
    with path.open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps({
                "item_id": item.item_id,
                "model": model,
                "prompt_variant": "plain",
                "raw_text": to_linearized(manifest.ground_truth[item.table_id]),
                "timestamp": "2026-01-01T00:00:00+00:00",
            }) + "\n")


class TestParseFilter:
    def test_grammar(self):
        got = parse_filter("part=A,digit_length=0..2,chart_type=line,entity_count=3")
        assert got["part"] is Part.A
        assert got["digit_lengths"] == [0, 1, 2]
        assert got["chart_type"] is ChartType.LINE
        assert got["entity_counts"] == [3]

    def test_empty(self):
        assert parse_filter(None) == {}
        assert parse_filter("") == {}

    def test_bad_clause(self):
        import click

        with pytest.raises(click.BadParameter):
            parse_filter("part")
        with pytest.raises(click.BadParameter):
            parse_filter("banana=7")


class TestGenerate:
    def test_default_summary_line(self, runner, tmp_path):
        result = runner.invoke(main, ["generate", "--out-dir", str(tmp_path)])
        assert result.exit_code == 0
        assert "tables=1020 items=7140" in result.output
        assert (tmp_path / "manifest.json").exists()

    def test_parts_a_only(self, runner, tmp_path):
        result = runner.invoke(main, ["generate", "--out-dir", str(tmp_path), "--parts", "A"])
        assert result.exit_code == 0
        assert "tables=1020 items=3060" in result.output

    def test_bad_seed_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["generate", "--seed", "banana", "--out-dir", str(tmp_path)])
        assert result.exit_code == 2

    def test_bad_part_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["generate", "--out-dir", str(tmp_path), "--parts", "Q"])
        assert result.exit_code == 2

    def test_json_summary(self, runner, tmp_path):
        result = runner.invoke(main, ["generate", "--out-dir", str(tmp_path), "--json"])
        summary = json.loads(result.output)
        assert summary["tables"] == 1020 and summary["items"] == 7140

    def test_idempotent_bytes(self, runner, tmp_path):
        runner.invoke(main, ["generate", "--out-dir", str(tmp_path)])
        first = (tmp_path / "manifest.json").read_bytes()
        runner.invoke(main, ["generate", "--out-dir", str(tmp_path)])
        assert (tmp_path / "manifest.json").read_bytes() == first


class TestRenderCommand:
    def test_render_filtered(self, runner, workspace):
        result = runner.invoke(main, [
            "render", "--manifest", str(workspace / "manifest.json"),
            "--out-dir", str(workspace / "images"),
            "--filter", "part=A,digit_length=1,chart_type=line",
        ])
        assert result.exit_code == 0, result.output
        assert "wrote 2 of 2 images" in result.output
        assert len(list((workspace / "images").glob("*.png"))) == 2

    def test_rerun_skips(self, runner, workspace):
        args = [
            "render", "--manifest", str(workspace / "manifest.json"),
            "--out-dir", str(workspace / "images"),
            "--filter", "part=A,digit_length=1,chart_type=line",
        ]
        runner.invoke(main, args)
        result = runner.invoke(main, args)
        assert "wrote 0 of 2 images" in result.output

    def test_image_refs_written_back(self, runner, workspace):
        runner.invoke(main, [
            "render", "--manifest", str(workspace / "manifest.json"),
            "--out-dir", str(workspace / "images"),
            "--filter", "part=A,digit_length=1,chart_type=line",
        ])
        manifest = Manifest.load(workspace / "manifest.json")
        rendered = [i for i in manifest.items if i.image_ref]
        assert len(rendered) >= 2


class TestScoreCommand:
    def test_ground_truth_predictions_score_perfectly(self, runner, workspace):
        manifest = Manifest.load(workspace / "manifest.json")
        items = manifest.items_for(part=Part.A)
        preds = workspace / "gt_preds.jsonl"
        gt_predictions(manifest, items, preds)
        result = runner.invoke(main, [
            "score", "--manifest", str(workspace / "manifest.json"),
            "--predictions", str(preds), "--out", str(workspace / "scores"),
        ])
        assert result.exit_code == 0, result.output
        scores = read_scores(workspace / "scores.jsonl")
        assert len(scores) == len(items)
        assert all(s.rms_tbe_f1 == 1.0 for s in scores)
        with (workspace / "scores.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["rms_tbe_f1_pct"] == "100.0"

    def test_garbled_prediction_flagged_rest_scored(self, runner, workspace, tmp_path):
        manifest = Manifest.load(workspace / "manifest.json")
        items = manifest.items_for(part=Part.A)[:3]
        preds = tmp_path / "preds.jsonl"
        gt_predictions(manifest, items[:2], preds)
        with preds.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({
                "item_id": items[2].item_id, "model": "echo",
                "prompt_variant": "plain", "raw_text": "I cannot read this chart.",
                "timestamp": "t",
            }) + "\n")
        result = runner.invoke(main, [
            "score", "--manifest", str(workspace / "manifest.json"),
            "--predictions", str(preds), "--out", str(tmp_path / "scores"),
        ])
        assert result.exit_code == 0
        assert "parse_failed=1" in result.output
        scores = read_scores(tmp_path / "scores.jsonl")
        flagged = [s for s in scores if s.parse_failed]
        assert len(flagged) == 1
        assert flagged[0].rms_tbe_f1 == 0.0

    def test_empty_predictions_warns(self, runner, workspace, tmp_path):
        preds = tmp_path / "empty.jsonl"
        preds.write_text("")
        result = runner.invoke(main, [
            "score", "--manifest", str(workspace / "manifest.json"),
            "--predictions", str(preds), "--out", str(tmp_path / "scores"),
        ])
        assert result.exit_code == 0
        assert "warning" in result.output.lower()
        assert read_scores(tmp_path / "scores.jsonl") == []

    def test_unknown_item_is_hard_error(self, runner, workspace, tmp_path):
        preds = tmp_path / "preds.jsonl"
        preds.write_text(json.dumps({
            "item_id": "no-such-item", "model": "m", "prompt_variant": "plain",
            "raw_text": "x", "timestamp": "t",
        }) + "\n")
        result = runner.invoke(main, [
            "score", "--manifest", str(workspace / "manifest.json"),
            "--predictions", str(preds), "--out", str(tmp_path / "scores"),
        ])
        assert result.exit_code == 1
        assert "unknown item" in result.output


class TestImportCommand:
    def test_import_and_dedupe(self, runner, tmp_path):
        dump = tmp_path / "dump.jsonl"
        lines = [
            json.dumps({"item_id": "a", "raw_text": "Year | A\n2018 | 1"}),
            json.dumps({"item_id": "a", "raw_text": "dup"}),
            "not json at all",
        ]
        dump.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, [
            "import", "--input", str(dump), "--store", str(tmp_path / "store.jsonl"),
            "--model", "ext-model",
        ])
        assert result.exit_code == 0
        assert "added=1" in result.output
        assert "skipped=1" in result.output
        assert "malformed=1" in result.output


class TestAnalyzeCommand:
    def test_analyze_writes_reports(self, runner, workspace, tmp_path):
        manifest = Manifest.load(workspace / "manifest.json")
        items = manifest.items_for(part=Part.A)
        preds = tmp_path / "preds.jsonl"
        gt_predictions(manifest, items, preds)
        runner.invoke(main, [
            "score", "--manifest", str(workspace / "manifest.json"),
            "--predictions", str(preds), "--out", str(tmp_path / "scores"),
        ])
        result = runner.invoke(main, [
            "analyze", "--manifest", str(workspace / "manifest.json"),
            "--scores", str(tmp_path / "scores.jsonl"),
            "--out-dir", str(tmp_path / "reports"),
        ])
        assert result.exit_code == 0, result.output
        files = list((tmp_path / "reports").glob("*.csv"))
        assert files
        dl = tmp_path / "reports" / "echo__digit_length.csv"
        with dl.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "digit_length"
        assert all(row[2] == "100" for row in rows[1:])  # rms_f1 column, x100

    def test_empty_scores_exit_one(self, runner, workspace, tmp_path):
        empty = tmp_path / "scores.jsonl"
        empty.write_text("")
        result = runner.invoke(main, [
            "analyze", "--manifest", str(workspace / "manifest.json"),
            "--scores", str(empty), "--out-dir", str(tmp_path / "reports"),
        ])
        assert result.exit_code == 1


class TestVerifyCommand:
    def test_list_names_without_running(self, runner):
        result = runner.invoke(main, ["verify", "--list"])
        assert result.exit_code == 0
        names = result.output.split()
        assert len(names) == 11
        assert "dataset-counts" in names

    def test_single_check_runs(self, runner):
        result = runner.invoke(main, ["verify", "--only", "two-point-example"])
        assert result.exit_code == 0
        assert "PASS two-point-example" in result.output

    def test_unknown_check_is_usage_error(self, runner):
        result = runner.invoke(main, ["verify", "--only", "nope"])
        assert result.exit_code == 2
