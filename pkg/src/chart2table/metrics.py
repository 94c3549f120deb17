"""Table-comparison metric family.

Two tables are compared as bags of datapoints, one datapoint per cell with
its row header (x category) and column header (entity name) attached.
Datapoints are aligned by minimal-cost matching, then the aligned value
pairs are scored with one of four distances:

* ``d_rms``      relative distance  min(1, |g-p| / |g|)
* ``d_tbe``      tick-based error   min(1, |g-p| / t), t = minor-tick estimate
* ``d_tbe_sig``  indicator of a visible error, 1{|g-p| / t >= 1}
* ``d_tbe_raw``  unclamped |g-p| / t

and aggregated into precision (over the n predicted datapoints), recall
(over the m ground-truth datapoints) and their harmonic mean.  Header
alignment uses normalized Levenshtein distance only; once matched, header
quality does not penalize the value scores (the classic baseline that does
multiply header similarity in is kept as ``rms_f1_baseline`` for
comparison).  The value-only variant ``rnss_tbe_f1`` matches the numeric
multisets regardless of headers; its gap over ``rms_tbe_f1`` is the
swapping error score ``ses``, which isolates values that were read
correctly but attached to the wrong entity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assignment import min_cost_assignment
from .parsing import canonicalize_header
from .tables import AxisSpec, DataTable


def normalized_levenshtein(a: str, b: str) -> float:
    """Levenshtein edit distance divided by max(len(a), len(b)); 0 when both
    strings are empty."""
    if a == b:
        return 0.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 1.0 if max(la, lb) else 0.0
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            sub = prev[j - 1] + (0 if ca == b[j - 1] else 1)
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[lb] / max(la, lb)


def d_rms(g: float, p: float) -> float:
    """Relative distance, clamped to 1.

    For g = 0 the ratio is undefined; by convention the distance is 0 when
    p is also 0 and 1 otherwise.
    """
    if g == 0:
        return 0.0 if p == 0 else 1.0
    return min(1.0, abs(g - p) / abs(g))


def _check_t(t: float) -> None:
    if not t > 0:
        raise ValueError(f"minor-tick estimate t must be positive, got {t!r}")


def d_tbe(g: float, p: float, t: float) -> float:
    """Error in minor-tick units, clamped to 1."""
    _check_t(t)
    return min(1.0, abs(g - p) / t)


def d_tbe_sig(g: float, p: float, t: float) -> int:
    """1 when the error is at least one minor tick (threshold inclusive)."""
    _check_t(t)
    return 1 if abs(g - p) / t >= 1.0 else 0


def d_tbe_raw(g: float, p: float, t: float) -> float:
    """Error in minor-tick units, unclamped."""
    _check_t(t)
    return abs(g - p) / t


@dataclass(frozen=True, slots=True)
class Datapoint:
    row_header: str
    col_header: str
    value: float | None


def flatten(table: DataTable) -> list[Datapoint]:
    """Row-major list of (row header, column header, value) datapoints."""
    points = []
    for rh, row in zip(table.row_headers, table.cells):
        for ch, v in zip(table.col_headers, row):
            points.append(Datapoint(rh, ch, v))
    return points


@dataclass(frozen=True, slots=True)
class Alignment:
    """A maximal matching between predicted and truth datapoints.

    ``pairs`` holds (pred_index, truth_index); each index appears at most
    once.  ``pair_costs`` is the matching cost per pair (header distance for
    header alignment, value distance for value alignment).
    """

    pairs: tuple[tuple[int, int], ...]
    pair_costs: tuple[float, ...]
    n_pred: int
    n_truth: int

    @property
    def total_cost(self) -> float:
        return sum(self.pair_costs)


def _header_cost_matrix(pred: Sequence[Datapoint], truth: Sequence[Datapoint]) -> np.ndarray:
    """Pairwise header distance: mean of the row-header and column-header
    normalized Levenshtein distances, on canonicalized text."""
    pred_rows = [canonicalize_header(d.row_header) for d in pred]
    pred_cols = [canonicalize_header(d.col_header) for d in pred]
    truth_rows = [canonicalize_header(d.row_header) for d in truth]
    truth_cols = [canonicalize_header(d.col_header) for d in truth]

    # distances are memoized per distinct string pair; tables repeat headers
    # across datapoints so this collapses most of the work
    memo: dict[tuple[str, str], float] = {}

    def nl(a: str, b: str) -> float:
        key = (a, b)
        if key not in memo:
            memo[key] = normalized_levenshtein(a, b)
        return memo[key]

    n, m = len(pred), len(truth)
    cost = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            cost[i, j] = 0.5 * (nl(pred_rows[i], truth_rows[j]) + nl(pred_cols[i], truth_cols[j]))
    return cost


def match_headers(truth: DataTable, pred: DataTable) -> Alignment:
    """Minimal-total-cost maximal matching of datapoints by header distance
    alone.  An empty predicted table yields an empty alignment."""
    truth_points = flatten(truth)
    pred_points = flatten(pred)
    if not truth_points or not pred_points:
        return Alignment((), (), len(pred_points), len(truth_points))
    cost = _header_cost_matrix(pred_points, truth_points)
    pairs = min_cost_assignment(cost)
    return Alignment(
        tuple(pairs),
        tuple(float(cost[i, j]) for i, j in pairs),
        len(pred_points),
        len(truth_points),
    )


def match_values(truth: DataTable, pred: DataTable, t: float) -> Alignment:
    """Minimal-cost matching over the numeric multisets alone (headers
    ignored), with tick-based error as the pair cost; absent predicted
    values cost the maximum 1."""
    _check_t(t)
    truth_points = flatten(truth)
    pred_points = flatten(pred)
    if not truth_points or not pred_points:
        return Alignment((), (), len(pred_points), len(truth_points))
    n, m = len(pred_points), len(truth_points)
    cost = np.empty((n, m))
    for i, dp in enumerate(pred_points):
        for j, dt in enumerate(truth_points):
            if dp.value is None:
                cost[i, j] = 1.0
            else:
                cost[i, j] = d_tbe(dt.value, dp.value, t)
    pairs = min_cost_assignment(cost)
    return Alignment(
        tuple(pairs),
        tuple(float(cost[i, j]) for i, j in pairs),
        len(pred_points),
        len(truth_points),
    )


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _pair_values(
    truth: DataTable, pred: DataTable, alignment: Alignment
) -> list[tuple[float, float | None]]:
    truth_points = flatten(truth)
    pred_points = flatten(pred)
    return [(truth_points[j].value, pred_points[i].value) for i, j in alignment.pairs]


def _f1_from_similarities(sims: Sequence[float], n_pred: int, n_truth: int) -> float:
    total = float(sum(sims))
    precision = total / n_pred if n_pred else 0.0
    recall = total / n_truth if n_truth else 0.0
    return _f1(precision, recall)


def rms_tbe_f1(
    truth: DataTable, pred: DataTable, axis: AxisSpec, alignment: Alignment | None = None
) -> float:
    """F1 over header-aligned datapoints with similarity 1 - d_tbe.

    Header distance affects the alignment only; matched pairs are scored
    purely on values.  Absent predicted cells score 0.
    """
    t = axis.minor_estimate_t
    _check_t(t)
    if alignment is None:
        alignment = match_headers(truth, pred)
    sims = [
        0.0 if p is None else 1.0 - d_tbe(g, p, t)
        for g, p in _pair_values(truth, pred, alignment)
    ]
    return _f1_from_similarities(sims, alignment.n_pred, alignment.n_truth)


def rms_tbe_f1_sig(
    truth: DataTable,
    pred: DataTable,
    axis: AxisSpec,
    alignment: Alignment | None = None,
    restrict_to_significant: bool = False,
) -> float:
    """F1 counting only visible errors: matched pairs within one minor tick
    score as fully correct (similarity 1 - d_tbe_sig).

    With ``restrict_to_significant`` the sub-threshold pairs are excluded
    from the denominators instead of counting as correct, turning the score
    into an indicator that the table has no visible error; the default
    keeps every datapoint in the denominators.
    """
    t = axis.minor_estimate_t
    _check_t(t)
    if alignment is None:
        alignment = match_headers(truth, pred)
    flags = [
        1 if p is None else d_tbe_sig(g, p, t)
        for g, p in _pair_values(truth, pred, alignment)
    ]
    if not restrict_to_significant:
        sims = [1.0 - f for f in flags]
        return _f1_from_similarities(sims, alignment.n_pred, alignment.n_truth)
    n_clean_matched = sum(1 for f in flags if f == 0)
    n_pred_kept = alignment.n_pred - n_clean_matched
    n_truth_kept = alignment.n_truth - n_clean_matched
    if n_pred_kept == 0 and n_truth_kept == 0:
        return 1.0  # nothing but sub-threshold matches: no visible error
    return 0.0


def tbe_raw_score(
    truth: DataTable, pred: DataTable, axis: AxisSpec, alignment: Alignment | None = None
) -> float:
    """Mean unclamped tick error over all datapoints.

    Matched pairs contribute |g-p|/t; unmatched or absent datapoints
    contribute |value|/t (the error of predicting nothing).
    """
    t = axis.minor_estimate_t
    _check_t(t)
    if alignment is None:
        alignment = match_headers(truth, pred)
    truth_points = flatten(truth)
    pred_points = flatten(pred)
    matched_pred = {i for i, _ in alignment.pairs}
    matched_truth = {j for _, j in alignment.pairs}
    errors = []
    for i, j in alignment.pairs:
        g = truth_points[j].value
        p = pred_points[i].value
        errors.append(abs(g) / t if p is None else d_tbe_raw(g, p, t))
    for j, dt in enumerate(truth_points):
        if j not in matched_truth:
            errors.append(abs(dt.value) / t)
    for i, dp in enumerate(pred_points):
        if i not in matched_pred:
            errors.append(0.0 if dp.value is None else abs(dp.value) / t)
    return float(np.mean(errors)) if errors else 0.0


def rnss_tbe_f1(truth: DataTable, pred: DataTable, axis: AxisSpec) -> float:
    """Order-free value similarity: minimal-cost matching of the numeric
    multisets with tick-based error, F1-aggregated."""
    t = axis.minor_estimate_t
    alignment = match_values(truth, pred, t)
    sims = [1.0 - c for c in alignment.pair_costs]
    return _f1_from_similarities(sims, alignment.n_pred, alignment.n_truth)


def ses(truth: DataTable, pred: DataTable, axis: AxisSpec) -> float:
    """Swapping error score: rnss_tbe_f1 - rms_tbe_f1.

    Near zero for both perfect and hopeless predictions; large when values
    were extracted correctly but assigned to the wrong entities.
    """
    return rnss_tbe_f1(truth, pred, axis) - rms_tbe_f1(truth, pred, axis)


def rms_f1_baseline(
    truth: DataTable,
    pred: DataTable,
    with_header_scores: bool = True,
    alignment: Alignment | None = None,
) -> float:
    """The classic relative-mapping-similarity F1.

    Same header alignment as rms_tbe_f1, but pair similarity is
    (1 - header distance) * (1 - d_rms) — or just (1 - d_rms) when
    ``with_header_scores`` is off.  Kept for comparison against the
    tick-based variants.
    """
    if alignment is None:
        alignment = match_headers(truth, pred)
    values = _pair_values(truth, pred, alignment)
    sims = []
    for (g, p), header_cost in zip(values, alignment.pair_costs):
        value_sim = 0.0 if p is None else 1.0 - d_rms(g, p)
        header_sim = (1.0 - header_cost) if with_header_scores else 1.0
        sims.append(header_sim * value_sim)
    return _f1_from_similarities(sims, alignment.n_pred, alignment.n_truth)


@dataclass(slots=True)
class ScoreRecord:
    """Per-item metric bundle (bounded metrics stored on [0, 1])."""

    item_id: str
    model: str
    prompt_variant: str
    rms_f1: float
    rms_f1_no_header: float
    rms_tbe_f1: float
    rms_tbe_f1_sig: float
    tbe_raw: float
    rnss_tbe_f1: float
    ses: float
    n_sig_cells: int
    t_used: float
    parse_failed: bool = False

    BOUNDED_FIELDS = (
        "rms_f1",
        "rms_f1_no_header",
        "rms_tbe_f1",
        "rms_tbe_f1_sig",
        "rnss_tbe_f1",
        "ses",
    )
    METRIC_FIELDS = BOUNDED_FIELDS + ("tbe_raw",)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "item_id": self.item_id,
            "model": self.model,
            "prompt_variant": self.prompt_variant,
            "rms_f1": self.rms_f1,
            "rms_f1_no_header": self.rms_f1_no_header,
            "rms_tbe_f1": self.rms_tbe_f1,
            "rms_tbe_f1_sig": self.rms_tbe_f1_sig,
            "tbe_raw": self.tbe_raw,
            "rnss_tbe_f1": self.rnss_tbe_f1,
            "ses": self.ses,
            "n_sig_cells": self.n_sig_cells,
            "t_used": self.t_used,
            "parse_failed": self.parse_failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRecord":
        return cls(
            item_id=d["item_id"],
            model=d.get("model", ""),
            prompt_variant=d.get("prompt_variant", "plain"),
            rms_f1=float(d["rms_f1"]),
            rms_f1_no_header=float(d["rms_f1_no_header"]),
            rms_tbe_f1=float(d["rms_tbe_f1"]),
            rms_tbe_f1_sig=float(d["rms_tbe_f1_sig"]),
            tbe_raw=float(d["tbe_raw"]),
            rnss_tbe_f1=float(d["rnss_tbe_f1"]),
            ses=float(d["ses"]),
            n_sig_cells=int(d.get("n_sig_cells", 0)),
            t_used=float(d.get("t_used", 0.0)),
            parse_failed=bool(d.get("parse_failed", False)),
        )


def score_tables(
    truth: DataTable,
    pred: DataTable,
    axis: AxisSpec,
    item_id: str = "",
    model: str = "",
    prompt_variant: str = "plain",
    parse_failed: bool = False,
) -> ScoreRecord:
    """Compute the whole metric bundle with one shared header alignment."""
    t = axis.minor_estimate_t
    alignment = match_headers(truth, pred)
    rms_tbe = rms_tbe_f1(truth, pred, axis, alignment)
    rnss = rnss_tbe_f1(truth, pred, axis)
    sig_flags = [
        1 if p is None else d_tbe_sig(g, p, t)
        for g, p in _pair_values(truth, pred, alignment)
    ]
    return ScoreRecord(
        item_id=item_id,
        model=model,
        prompt_variant=prompt_variant,
        rms_f1=rms_f1_baseline(truth, pred, True, alignment),
        rms_f1_no_header=rms_f1_baseline(truth, pred, False, alignment),
        rms_tbe_f1=rms_tbe,
        rms_tbe_f1_sig=rms_tbe_f1_sig(truth, pred, axis, alignment),
        tbe_raw=tbe_raw_score(truth, pred, axis, alignment),
        rnss_tbe_f1=rnss,
        ses=rnss - rms_tbe,
        n_sig_cells=int(sum(sig_flags)),
        t_used=t,
        parse_failed=parse_failed,
    )
