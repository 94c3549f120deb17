"""Command-line pipeline: generate -> render -> query/import -> score ->
analyze/report, plus the self-contained verification suite.

Exit codes: 0 success, 1 check or scoring failure, 2 usage/config error.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import __version__
from .analysis import (
    AggregateTable,
    ComparisonResult,
    Dimension,
    aggregate,
    compare_conditions,
    emit_report,
)
from .client import EndpointConfig, PredictionStore, run_batch
from .generator import ConfigError, GenConfig, Manifest, generate_manifest
from .metrics import ScoreRecord, score_tables
from .parsing import PredictionRecord, parse_prediction, read_prediction_records
from .render import RenderBatchError, StyleSpec, render_manifest
from .tables import ChartType, Condition, DataTable, Part

_CONDITIONS_VS_BASE = (
    Condition.TICKS3,
    Condition.TICKS11,
    Condition.POS,
    Condition.NEG,
    Condition.EXT,
    Condition.COMMA,
    Condition.SCI,
    Condition.ABBR,
)


def _parse_parts(text: str) -> list[Part]:
    try:
        return [Part(p.strip().upper()) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--parts")


def parse_filter(text: str | None) -> dict:
    """Filter grammar: comma-separated key=value with ranges, e.g.
    ``part=A,digit_length=0..2,chart_type=line``."""
    out: dict = {}
    if not text:
        return out
    for clause in text.split(","):
        clause = clause.strip()
        if not clause:
            continue
        if "=" not in clause:
            raise click.BadParameter(f"bad filter clause {clause!r}", param_hint="--filter")
        key, _, value = clause.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key == "part":
                out["part"] = Part(value.upper())
            elif key == "condition":
                out["condition"] = Condition(value.lower())
            elif key == "chart_type":
                out["chart_type"] = ChartType(value.lower())
            elif key in ("digit_length", "entity_count"):
                if ".." in value:
                    lo, _, hi = value.partition("..")
                    values = list(range(int(lo), int(hi) + 1))
                else:
                    values = [int(value)]
                out["digit_lengths" if key == "digit_length" else "entity_counts"] = values
            else:
                raise click.BadParameter(f"unknown filter key {key!r}", param_hint="--filter")
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--filter")
    return out


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Chart-to-table benchmark toolkit."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("--parts", default="A,B,C,D", show_default=True, help="Parts to include.")
@click.option("--tables-per-entity-count", type=int, default=10, show_default=True)
@click.option("--x-categories", type=int, default=4, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable summary.")
def generate(seed, out_dir, parts, tables_per_entity_count, x_categories, as_json) -> None:
    """Generate the benchmark manifest and ground-truth tables."""
    try:
        config = GenConfig(
            seed=seed,
            tables_per_entity_count=tables_per_entity_count,
            x_category_count=x_categories,
        )
        manifest = generate_manifest(config, _parse_parts(parts))
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    manifest.save(path)
    summary = {
        "tables": len(manifest.derived_table_ids()),
        "items": len(manifest.items),
        "manifest": str(path),
    }
    if as_json:
        click.echo(json.dumps(summary))
    else:
        click.echo(f"tables={summary['tables']} items={summary['items']}")
        click.echo(f"wrote {path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--style", "style_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--filter", "filter_expr", default=None, help="e.g. part=A,digit_length=0..2")
@click.option("--json", "as_json", is_flag=True)
def render(manifest_path, out_dir, style_path, filter_expr, as_json) -> None:
    """Render chart images (PNG + metadata sidecar) for manifest items."""
    manifest = Manifest.load(manifest_path)
    style = StyleSpec.load(style_path) if style_path else StyleSpec()
    items = manifest.items_for(**parse_filter(filter_expr))
    try:
        written = render_manifest(manifest, style, out_dir, items=items)
    except RenderBatchError as exc:
        manifest.save(manifest_path)
        raise click.ClickException(
            f"partial render: wrote {exc.written}, {len(exc.failures)} failed "
            f"(rerun to resume): {sorted(exc.failures)[:5]}"
        )
    manifest.save(manifest_path)
    summary = {"written": written, "selected": len(items), "out_dir": str(out_dir)}
    click.echo(json.dumps(summary) if as_json else f"wrote {written} of {len(items)} images")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--endpoint", "endpoint_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--variant", type=click.Choice(["plain", "hint"]), default="plain", show_default=True)
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--filter", "filter_expr", default=None)
@click.option("--image-root", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.option("--json", "as_json", is_flag=True)
def query(manifest_path, endpoint_path, variant, store_path, filter_expr, image_root, as_json) -> None:
    """Query a model endpoint for each rendered item; resumable."""
    manifest = Manifest.load(manifest_path)
    endpoint = EndpointConfig.load(endpoint_path)
    items = manifest.items_for(**parse_filter(filter_expr))
    store = PredictionStore(store_path)
    summary = run_batch(endpoint, items, variant, store, image_root=image_root)
    if as_json:
        click.echo(json.dumps(summary))
    else:
        click.echo(
            f"succeeded={summary['succeeded']} failed={summary['failed']} "
            f"skipped={summary['skipped']}"
        )
    if summary["failed"]:
        sys.exit(1)


@main.command(name="import")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--model", default=None, help="Override/assign the model name.")
@click.option("--variant", default="plain", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def import_predictions(input_path, store_path, model, variant, as_json) -> None:
    """Ingest a third-party prediction dump (JSON Lines) into a store."""
    store = PredictionStore(store_path)
    added = skipped = bad = 0
    with input_path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                if not d.get("item_id"):
                    raise KeyError("item_id")
                record = PredictionRecord.from_dict(d)
            except (json.JSONDecodeError, KeyError) as exc:
                click.echo(f"line {lineno}: skipped malformed record ({exc})", err=True)
                bad += 1
                continue
            if model:
                record.model = model
            if not record.prompt_variant:
                record.prompt_variant = variant
            if record.key in store:
                skipped += 1
                continue
            store.append(record)
            added += 1
    summary = {"added": added, "skipped": skipped, "malformed": bad}
    click.echo(json.dumps(summary) if as_json else
               f"added={added} skipped={skipped} malformed={bad}")


def write_scores(scores: list[ScoreRecord], out_base: Path) -> tuple[Path, Path]:
    """Write scores as JSON Lines and CSV (bounded metrics also x100)."""
    jsonl_path = out_base.with_suffix(".jsonl")
    csv_path = out_base.with_suffix(".csv")
    with jsonl_path.open("w", encoding="utf-8") as fh:
        for s in scores:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")
    fields = list(ScoreRecord.__dataclass_fields__)
    pct_fields = [f"{m}_pct" for m in ScoreRecord.BOUNDED_FIELDS]
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields + pct_fields)
        for s in scores:
            d = s.to_dict()
            row = [d[f] for f in fields]
            row += [100 * d[m] for m in ScoreRecord.BOUNDED_FIELDS]
            writer.writerow(row)
    return jsonl_path, csv_path


def read_scores(path: Path) -> list[ScoreRecord]:
    scores = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                scores.append(ScoreRecord.from_dict(json.loads(line)))
    return scores


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_base", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="Output basename; .jsonl and .csv are written.")
@click.option("--json", "as_json", is_flag=True)
def score(manifest_path, predictions_path, out_base, as_json) -> None:
    """Score stored predictions against the manifest ground truth."""
    manifest = Manifest.load(manifest_path)
    by_id = manifest.items_by_id()
    records = read_prediction_records(predictions_path)
    if not records:
        click.echo("warning: no prediction records found", err=True)
    scores = []
    flagged = 0
    for record in records:
        item = by_id.get(record.item_id)
        if item is None:
            raise click.ClickException(f"prediction for unknown item {record.item_id!r}")
        truth = manifest.ground_truth.get(item.table_id)
        if truth is None:
            raise click.ClickException(f"missing ground truth table {item.table_id!r}")
        if record.error is not None:
            pred = DataTable.build(f"{record.item_id}-failed", [], [], [])
            failed = True
        else:
            pred, diags = parse_prediction(record.raw_text, f"{record.item_id}-pred")
            failed = diags.dialect_detected.value == "failed"
        scores.append(
            score_tables(
                truth, pred, item.axis,
                item_id=record.item_id, model=record.model,
                prompt_variant=record.prompt_variant, parse_failed=failed,
            )
        )
        flagged += failed
    jsonl_path, csv_path = write_scores(scores, out_base)
    summary = {"scored": len(scores), "parse_failed": flagged,
               "jsonl": str(jsonl_path), "csv": str(csv_path)}
    click.echo(json.dumps(summary) if as_json else
               f"scored={len(scores)} parse_failed={flagged} -> {jsonl_path}")


def _build_report_inputs(
    manifest: Manifest, scores: list[ScoreRecord], metric: str, alpha: float,
    dimensions: list[Dimension],
) -> tuple[list[AggregateTable], list[ComparisonResult]]:
    by_id = manifest.items_by_id()
    models = sorted({s.model for s in scores})
    tables: list[AggregateTable] = []
    tests: list[ComparisonResult] = []
    for model in models:
        subset = [s for s in scores if s.model == model]
        for dim in dimensions:
            rows = aggregate(subset, by_id, dim)
            if rows:
                tables.append(AggregateTable(model, dim, rows))
        for condition in _CONDITIONS_VS_BASE:
            result = compare_conditions(subset, by_id, Condition.BASE, condition,
                                        metric=metric, alpha=alpha)
            if result.n_pairs or result.n_excluded:
                tests.append(ComparisonResult(model, Condition.BASE.value,
                                              condition.value, metric, result))
    return tables, tests


def _analyze_impl(manifest_path, scores_path, out_dir, metric, alpha, plots, as_json) -> None:
    manifest = Manifest.load(manifest_path)
    scores = read_scores(scores_path)
    if not scores:
        raise click.ClickException("no scores to analyze")
    tables, tests = _build_report_inputs(manifest, scores, metric, alpha, list(Dimension))
    files = emit_report(tables, tests, out_dir, plots=plots)
    summary = {"files": [str(f) for f in files], "models": len({t.model for t in tables})}
    click.echo(json.dumps(summary) if as_json else
               "\n".join(f"wrote {f}" for f in files))


_ANALYZE_OPTS = [
    click.option("--manifest", "manifest_path", required=True,
                 type=click.Path(exists=True, dir_okay=False, path_type=Path)),
    click.option("--scores", "scores_path", required=True,
                 type=click.Path(exists=True, dir_okay=False, path_type=Path)),
    click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), required=True),
    click.option("--metric", default="rms_tbe_f1", show_default=True),
    click.option("--alpha", type=float, default=0.05, show_default=True),
    click.option("--json", "as_json", is_flag=True),
]


def _with_opts(opts):
    def deco(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return deco


@main.command()
@_with_opts(_ANALYZE_OPTS)
def analyze(manifest_path, scores_path, out_dir, metric, alpha, as_json) -> None:
    """Aggregate scores by bias dimension and run paired tests (CSV only)."""
    _analyze_impl(manifest_path, scores_path, out_dir, metric, alpha, False, as_json)


@main.command()
@_with_opts(_ANALYZE_OPTS)
def report(manifest_path, scores_path, out_dir, metric, alpha, as_json) -> None:
    """Like analyze, plus plot images of the grouped means."""
    _analyze_impl(manifest_path, scores_path, out_dir, metric, alpha, True, as_json)


@main.command()
@click.option("--list", "list_only", is_flag=True, help="List check names without running.")
@click.option("--only", default=None, help="Comma-separated subset of checks to run.")
@click.option("--json", "as_json", is_flag=True)
def verify(list_only, only, as_json) -> None:
    """Run the built-in verification suite (no network required)."""
    from .verify import CHECKS, run_checks

    if list_only:
        for name in CHECKS:
            click.echo(name)
        return
    names = [n.strip() for n in only.split(",")] if only else None
    unknown = [n for n in (names or []) if n not in CHECKS]
    if unknown:
        raise click.UsageError(f"unknown checks: {', '.join(unknown)}")
    results = run_checks(names)
    failed = [r for r in results if not r.passed]
    if as_json:
        click.echo(json.dumps([r.to_dict() for r in results]))
    else:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            click.echo(f"{status} {r.name} ({r.seconds:.2f}s){': ' + r.detail if r.detail else ''}")
        click.echo(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
