import random
from fractions import Fraction

import numpy as np
import pytest

from chart2table.assignment import assignment_cost, min_cost_assignment


def brute_force_min(cost):
    import itertools

    n, m = cost.shape
    k = min(n, m)
    best = None
    for rows in itertools.combinations(range(n), k):
        for cols in itertools.permutations(range(m), k):
            total = sum((Fraction(float(cost[i, j])) for i, j in zip(rows, cols)), Fraction(0))
            if best is None or total < best:
                best = total
    return best


class TestMinCostAssignment:
    def test_identity_on_equal_costs(self):
        pairs = min_cost_assignment(np.zeros((4, 4)))
        assert pairs == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_recovers_permutation(self):
        cost = np.ones((3, 3))
        cost[0, 2] = cost[1, 0] = cost[2, 1] = 0.0
        assert min_cost_assignment(cost) == [(0, 2), (1, 0), (2, 1)]

    @pytest.mark.parametrize("shape", [(2, 5), (5, 2), (1, 4), (4, 1), (6, 6)])
    def test_rectangular_is_maximal(self, shape):
        rng = random.Random(0)
        cost = np.array([[rng.random() for _ in range(shape[1])] for _ in range(shape[0])])
        pairs = min_cost_assignment(cost)
        assert len(pairs) == min(shape)
        assert len({i for i, _ in pairs}) == len(pairs)
        assert len({j for _, j in pairs}) == len(pairs)

    def test_matches_brute_force_on_random_instances(self):
        rng = random.Random(123)
        for _ in range(300):
            n, m = rng.randint(1, 5), rng.randint(1, 5)
            cost = np.array(
                [[rng.choice([0.0, 0.25, 1 / 3, 0.5, 1.0, 2.0]) for _ in range(m)] for _ in range(n)]
            )
            pairs = min_cost_assignment(cost)
            got = sum((Fraction(float(cost[i, j])) for i, j in pairs), Fraction(0))
            assert got == brute_force_min(cost)

    def test_deterministic(self):
        rng = random.Random(9)
        cost = np.array([[rng.random() for _ in range(6)] for _ in range(6)])
        assert min_cost_assignment(cost) == min_cost_assignment(cost.copy())

    def test_empty(self):
        assert min_cost_assignment(np.zeros((0, 3))) == []
        assert min_cost_assignment(np.zeros((3, 0))) == []

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            min_cost_assignment(np.array([[1.0, float("inf")]]))

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            min_cost_assignment(np.zeros(3))

    def test_assignment_cost_helper(self):
        cost = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert assignment_cost(cost, [(0, 0), (1, 1)]) == 5.0
