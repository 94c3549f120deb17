"""Turn raw model output text into a :class:`DataTable`.

Models emit tables in a handful of dialects: a linearized form with
" | " cell separators and newline (or literal "<0x0A>") row separators,
GitHub-style markdown pipe tables, and occasionally bare whitespace-aligned
columns.  The parser detects the dialect, strips surrounding prose and code
fences, and converts numeric cells with :func:`~chart2table.numformat.parse_number`;
cells that refuse to parse become absent (``None``) and are counted in the
diagnostics rather than failing the whole table.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .numformat import NumberParseError, format_tick, parse_number
from .tables import DataTable, TickFormat


class Dialect(str, Enum):
    LINEARIZED = "linearized"
    MARKDOWN = "markdown"
    DELIMITER_FREE = "delimiter_free"
    FAILED = "failed"


@dataclass(slots=True)
class ParseDiagnostics:
    dialect_detected: Dialect = Dialect.FAILED
    dropped_lines: int = 0
    unparsed_cells: int = 0
    orientation_transposed: bool = False


#: decoration characters trimmed from header ends; brackets stay because
#: they usually carry meaning ("GDP (USD)")
_HEADER_TRIM = "\"'`*_~^|:;,.!?<>#= \t\r\n"


def canonicalize_header(s: str) -> str:
    """Canonical form used for header matching: lowercase, outer whitespace
    and decoration punctuation trimmed, internal whitespace collapsed.
    Originals are kept for reporting; only the match runs on this."""
    trimmed = s.strip().strip(_HEADER_TRIM)
    return re.sub(r"\s+", " ", trimmed).lower()


def to_linearized(table: DataTable, corner: str = "Category") -> str:
    """Serialize a table to the linearized dialect (the toolkit's own
    canonical text form; parse_prediction round-trips it exactly)."""
    head = " | ".join([corner, *table.col_headers])
    lines = [head]
    for header, row in zip(table.row_headers, table.cells):
        cells = ["" if v is None else format_tick(v, TickFormat.PLAIN) for v in row]
        lines.append(" | ".join([header, *cells]))
    return "\n".join(lines)


def to_markdown(table: DataTable, corner: str = "Category") -> str:
    """Serialize a table as a markdown pipe table."""
    head = [corner, *table.col_headers]
    out = ["| " + " | ".join(head) + " |"]
    out.append("|" + "|".join(["---"] * len(head)) + "|")
    for header, row in zip(table.row_headers, table.cells):
        cells = ["" if v is None else format_tick(v, TickFormat.PLAIN) for v in row]
        out.append("| " + " | ".join([header, *cells]) + " |")
    return "\n".join(out)


_FENCE_RE = re.compile(r"^```[\w-]*\s*$")
_MD_SEPARATOR_RE = re.compile(r"^\s*:?-{3,}:?\s*$")


def _split_rows(text: str) -> list[str]:
    text = text.replace("<0x0A>", "\n").replace("\r\n", "\n").replace("\r", "\n")
    lines = []
    for line in text.split("\n"):
        if _FENCE_RE.match(line.strip()):
            continue
        lines.append(line)
    return lines


def _looks_numeric(token: str) -> bool:
    try:
        parse_number(token)
        return True
    except NumberParseError:
        return False


def _candidate_blocks(lines: list[str]) -> list[tuple[Dialect, list[str]]]:
    """Contiguous runs of table-looking lines.

    All pipe-delimited lines form one block regardless of whether they carry
    markdown edge pipes; the dialect is refined later from the presence of a
    separator rule line.
    """
    blocks: list[tuple[Dialect, list[str]]] = []
    current: list[str] = []
    current_kind: Dialect | None = None
    for line in lines + [""]:
        stripped = line.strip()
        if "|" in stripped:
            kind = Dialect.LINEARIZED
        elif stripped and len(stripped.split()) >= 2:
            kind = Dialect.DELIMITER_FREE
        else:
            kind = None
        if kind != current_kind:
            if current_kind is not None and current:
                blocks.append((current_kind, current))
            current = []
            current_kind = kind
        if kind is not None:
            current.append(line)
    return blocks


def _pipe_grid(lines: Sequence[str]) -> tuple[list[list[str]], Dialect]:
    rows = []
    dialect = Dialect.LINEARIZED
    for line in lines:
        body = line.strip().strip("|")
        cells = [c.strip() for c in body.split("|")]
        if cells and all(_MD_SEPARATOR_RE.match(c) for c in cells):
            dialect = Dialect.MARKDOWN  # header/body rule line, dropped
            continue
        rows.append(cells)
    return rows, dialect


def _bare_grid(lines: list[str]) -> list[list[str]] | None:
    """Whitespace-separated columns; trusted only when every data cell is
    numeric and the widths line up.  Leading prose lines are shed."""
    rows = [line.split() for line in lines if line.strip()]
    for start in range(len(rows) - 1):
        grid = rows[start:]
        if len({len(r) for r in grid}) != 1 or len(grid[0]) < 2:
            continue
        if all(all(_looks_numeric(tok) for tok in row[1:]) for row in grid[1:]):
            return grid
    return None


def _grid_from_block(kind: Dialect, lines: list[str]) -> tuple[list[list[str]], Dialect] | None:
    if kind is Dialect.LINEARIZED:
        grid, dialect = _pipe_grid(lines)
    else:
        maybe = _bare_grid(lines)
        if maybe is None:
            return None
        grid, dialect = maybe, Dialect.DELIMITER_FREE
    grid = [row for row in grid if any(cell for cell in row)]
    if len(grid) < 2 or max(len(r) for r in grid) < 2:
        return None
    return grid, dialect


def _table_from_grid(grid: list[list[str]], table_id: str, diags: ParseDiagnostics) -> DataTable:
    width = max(len(r) for r in grid)
    norm = [row + [""] * (width - len(row)) for row in grid]
    col_headers = [c for c in norm[0][1:]]
    row_headers = []
    cells: list[list[float | None]] = []
    for row in norm[1:]:
        row_headers.append(row[0])
        parsed: list[float | None] = []
        for token in row[1 : len(col_headers) + 1]:
            try:
                parsed.append(parse_number(token))
            except NumberParseError:
                parsed.append(None)
                diags.unparsed_cells += 1
        cells.append(parsed)
    return DataTable.build(table_id, row_headers, col_headers, cells)


def transpose_table(table: DataTable) -> DataTable:
    cells = [[table.cells[i][j] for i in range(table.n_rows)] for j in range(table.n_cols)]
    return DataTable.build(table.id, table.col_headers, table.row_headers, cells)


def parse_prediction(
    text: str, table_id: str = "prediction", transpose: bool = False
) -> tuple[DataTable, ParseDiagnostics]:
    """Extract the best table from raw model output.

    Returns the parsed table plus diagnostics.  When the output holds more
    than one table-like block, the largest by cell count wins.  On failure
    the table is empty and ``dialect_detected`` is ``Dialect.FAILED``.

    Orientation is taken as emitted; the metric layer's matching absorbs
    header assignment, so ``transpose`` flips rows and columns only when a
    caller explicitly asks for it.
    """
    diags = ParseDiagnostics()
    lines = _split_rows(text or "")
    best: tuple[int, Dialect, list[list[str]]] | None = None
    for kind, block in _candidate_blocks(lines):
        result = _grid_from_block(kind, block)
        if result is None:
            continue
        grid, dialect = result
        size = (len(grid) - 1) * (max(len(r) for r in grid) - 1)
        if best is None or size > best[0]:
            best = (size, dialect, grid)
    if best is None:
        diags.dialect_detected = Dialect.FAILED
        diags.dropped_lines = sum(1 for line in lines if line.strip())
        return DataTable.build(table_id, [], [], []), diags

    _, kind, grid = best
    diags.dialect_detected = kind
    table_lines = len(grid)
    diags.dropped_lines = sum(1 for line in lines if line.strip()) - table_lines
    table = _table_from_grid(grid, table_id, diags)
    if transpose and table.n_cells:
        table = transpose_table(table)
        diags.orientation_transposed = True
    return table, diags


@dataclass(slots=True)
class PredictionRecord:
    """One stored model response for one benchmark item."""

    item_id: str
    model: str
    prompt_variant: str
    raw_text: str
    timestamp: str
    error: str | None = None
    attempts: int = 1

    def to_dict(self) -> dict:
        d = {
            "schema_version": 1,
            "item_id": self.item_id,
            "model": self.model,
            "prompt_variant": self.prompt_variant,
            "raw_text": self.raw_text,
            "timestamp": self.timestamp,
        }
        if self.error is not None:
            d["error"] = self.error
        if self.attempts != 1:
            d["attempts"] = self.attempts
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionRecord":
        return cls(
            item_id=d["item_id"],
            model=d.get("model", ""),
            prompt_variant=d.get("prompt_variant", "plain"),
            raw_text=d.get("raw_text") or "",
            timestamp=d.get("timestamp", ""),
            error=d.get("error"),
            attempts=int(d.get("attempts", 1)),
        )

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.item_id, self.model, self.prompt_variant)


def read_prediction_records(path) -> list[PredictionRecord]:
    """Load a JSON Lines prediction store, skipping blank lines."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            records.append(PredictionRecord.from_dict(json.loads(line)))
    return records


def append_prediction_record(path, record: PredictionRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict()) + "\n")
