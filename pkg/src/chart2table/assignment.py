"""Exact minimal-cost assignment for rectangular cost matrices.

Classic Hungarian algorithm in the O(n^2 m) potentials-plus-shortest-
augmenting-path form.  Matrices here are tiny (tables have at most a few
dozen datapoints), so clarity wins over micro-optimization; the brute-force
enumeration oracle in the test suite pins exactness.

Ties between equally cheap assignments resolve deterministically: rows are
processed in order and column scans run ascending, which prefers low column
indices (an all-equal cost matrix yields the identity assignment).
"""

from __future__ import annotations

import numpy as np

_INF = float("inf")


def min_cost_assignment(cost: np.ndarray) -> list[tuple[int, int]]:
    """Match rows of *cost* to columns minimizing the total matched cost.

    Returns the matching as (row, col) pairs, sorted by row; its size is
    ``min(n_rows, n_cols)`` (a maximal matching).  Costs must be finite.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")

    transposed = n > m
    if transposed:
        cost = cost.T
        n, m = m, n

    # 1-based arrays: row potential u, column potential v, p[j] = row
    # assigned to column j (0 = free), way[j] = previous column on the
    # augmenting path.  Column 0 is a virtual start column.
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [_INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = _INF
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    pairs = [(p[j] - 1, j - 1) for j in range(1, m + 1) if p[j] != 0]
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    return sorted(pairs)


def assignment_cost(cost: np.ndarray, pairs: list[tuple[int, int]]) -> float:
    cost = np.asarray(cost, dtype=float)
    return float(sum(cost[i, j] for i, j in pairs))
