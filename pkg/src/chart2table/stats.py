"""Statistical analysis primitives: paired Wilcoxon signed-rank test,
Pearson correlation, coefficient of variation, and polyline crossing
counts.

The Wilcoxon test is implemented from scratch rather than delegated to a
library because the exact two-sided p-value must remain available in the
presence of tied ranks: the null distribution of W+ is built conditionally
on the observed (average) rank vector by dynamic programming, which is
identical to enumerating all 2^n sign assignments.  Above the exact-mode
cutoff a normal approximation with continuity and tie corrections is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .tables import DataTable

EXACT_MODE_MAX_N = 25
DEFAULT_ALPHA = 0.05


class Direction(str, Enum):
    BASE_BETTER = "base_better"
    COMPARED_BETTER = "compared_better"
    NO_DIFFERENCE = "no_difference"


@dataclass(frozen=True, slots=True)
class TestResult:
    statistic: float
    p_value: float
    n_pairs: int
    direction: Direction
    method: str = "exact"
    n_excluded: int = 0


def _average_ranks(values: list[float]) -> list[float]:
    """Ranks (1-based) of *values* with ties receiving the average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # mean of 1-based positions i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_wplus_cdf(doubled_ranks: list[int]) -> list[int]:
    """Counts of sign assignments per doubled W+ value.

    Equivalent to enumerating all 2^n assignments: each rank is either in
    the positive sum or not.  Ranks arrive doubled so tied (half-integer)
    average ranks stay integral.
    """
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        nxt = counts[:]
        for s in range(total - r + 1):
            if counts[s]:
                nxt[s + r] += counts[s]
        counts = nxt
    return counts


def _exact_two_sided_p(ranks: list[float], w_plus: float) -> float:
    doubled = [round(2 * r) for r in ranks]
    counts = _exact_wplus_cdf(doubled)
    w2 = round(2 * w_plus)
    n_total = 2 ** len(ranks)
    le = sum(counts[: w2 + 1])
    ge = sum(counts[w2:])
    return min(1.0, 2 * min(le, ge) / n_total)


def _normal_two_sided_p(ranks: list[float], w_plus: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4
    var = n * (n + 1) * (2 * n + 1) / 24
    # tie correction: each group of t tied ranks removes (t^3 - t) / 48
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    var -= sum(t**3 - t for t in seen.values()) / 48
    if var <= 0:
        return 1.0
    diff = w_plus - mean
    if diff == 0:
        return 1.0
    # continuity correction pulls the statistic half a step toward the mean
    z = (diff - math.copysign(0.5, diff)) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2))


def wilcoxon_signed_rank(
    x: list[float],
    y: list[float],
    alpha: float = DEFAULT_ALPHA,
    mode: str = "auto",
) -> TestResult:
    """Paired two-sided Wilcoxon signed-rank test of x against y.

    Zero differences are dropped; tied absolute differences get average
    ranks.  ``mode`` is "exact", "normal", or "auto" (exact up to 25
    non-zero pairs).  The reported statistic is min(W+, W-).  Direction
    follows the sign of the mean difference when the test is significant
    at *alpha*, with x playing the role of the base sample.
    """
    if len(x) != len(y):
        raise ValueError(f"paired samples differ in length: {len(x)} vs {len(y)}")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return TestResult(0.0, 1.0, 0, Direction.NO_DIFFERENCE, "degenerate")
    if n < 5:
        raise ValueError(f"need at least 5 non-zero differences, got {n}")

    ranks = _average_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    statistic = min(w_plus, w_minus)

    if mode not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown mode {mode!r}")
    use_exact = mode == "exact" or (mode == "auto" and n <= EXACT_MODE_MAX_N)
    if use_exact:
        p = _exact_two_sided_p(ranks, w_plus)
        method = "exact"
    else:
        p = _normal_two_sided_p(ranks, w_plus)
        method = "normal"

    if p >= alpha:
        direction = Direction.NO_DIFFERENCE
    else:
        mean_diff = sum(diffs) / len(diffs)
        direction = Direction.BASE_BETTER if mean_diff > 0 else Direction.COMPARED_BETTER
    return TestResult(float(statistic), float(p), n, direction, method)


def pearson(x: list[float], y: list[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points")
    mx = sum(x) / n
    my = sum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = sum(a * a for a in dx)
    syy = sum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise ValueError("zero variance in at least one sample")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)


def coefficient_of_variation(counts: list[float]) -> float:
    """Population standard deviation over mean of per-bucket counts;
    0 means a perfectly balanced dataset."""
    if not counts:
        raise ValueError("empty counts")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    n = len(counts)
    mean = sum(counts) / n
    if mean <= 0:
        raise ValueError("mean of counts must be positive")
    var = sum((c - mean) ** 2 for c in counts) / n
    return math.sqrt(var) / mean


def count_crossings(table: DataTable) -> tuple[int, float]:
    """Crossing points between entity polylines.

    Each entity is a polyline over the x-category indices.  For every pair
    of distinct entities, a crossing is counted when their segments
    intersect strictly between consecutive x positions (value order flips),
    plus one per x position where the two entities share the same value
    (touch points, counted once per pair per position).  Returns the total
    and the average per entity.
    """
    n_entities = len(table.col_headers)
    n_rows = len(table.row_headers)
    if n_entities < 2 or n_rows < 2:
        raise ValueError("need at least two entities and two x categories")
    columns = [table.column(j) for j in range(n_entities)]
    for col in columns:
        if any(v is None for v in col):
            raise ValueError("crossing counts require fully populated tables")
    total = 0
    for a in range(n_entities):
        for b in range(a + 1, n_entities):
            diffs = [va - vb for va, vb in zip(columns[a], columns[b])]
            total += sum(1 for d in diffs if d == 0)
            total += sum(
                1 for d1, d2 in zip(diffs, diffs[1:]) if (d1 > 0 > d2) or (d1 < 0 < d2)
            )
    return total, total / n_entities
