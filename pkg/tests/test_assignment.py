import math
from collections import Counter

import numpy as np
import pytest

from rpmbm.assignment import (
    SENTINEL_COST,
    Assignment,
    CostMatrix,
    InfeasibleAssignmentError,
    murty_kbest,
    solve_optimal,
)

from helpers import enumerate_assignments


def random_matrix(rng, m, n, p_inf=0.2):
    entries = rng.uniform(-5, 5, size=(m, n))
    mask = rng.random(size=(m, n)) < p_inf
    entries[mask] = np.inf
    # keep every row feasible
    for row in range(m):
        if not np.isfinite(entries[row]).any():
            entries[row, rng.integers(n)] = rng.uniform(-5, 5)
    return entries


class TestCostMatrix:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            CostMatrix(np.zeros((2, 3)), old_track_count=2)  # needs 2+2 columns

    def test_sentinel_becomes_infinite(self):
        c = CostMatrix(np.array([[1.0, SENTINEL_COST]]), old_track_count=1)
        assert np.isinf(c.entries[0, 1])

    def test_entries_read_only(self):
        c = CostMatrix(np.array([[1.0, 2.0]]), old_track_count=1)
        with pytest.raises(ValueError):
            c.entries[0, 0] = 5.0

    def test_rows(self):
        c = CostMatrix(np.zeros((2, 5)), old_track_count=3)
        assert c.rows == 2


class TestSolveOptimal:
    def test_single_cell(self):
        sol = solve_optimal(CostMatrix(np.array([[3.0]]), 0))
        assert sol.row_to_column == (0,)
        assert sol.total_cost == pytest.approx(3.0)

    def test_diagonal_optimum(self):
        sol = solve_optimal(CostMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]), 0))
        assert sol.row_to_column == (0, 1)
        assert sol.total_cost == pytest.approx(2.0)

    def test_matches_brute_force_4x7(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            entries = random_matrix(rng, 4, 7)
            sol = solve_optimal(CostMatrix(entries, 3))
            best = min(c for _, c in enumerate_assignments(entries))
            assert sol.total_cost == pytest.approx(best, abs=1e-12)

    def test_infeasible(self):
        entries = np.array([[np.inf, 1.0], [np.inf, 1.0]])
        with pytest.raises(InfeasibleAssignmentError):
            solve_optimal(CostMatrix(entries, 0))

    def test_empty(self):
        sol = solve_optimal(CostMatrix(np.zeros((0, 0)), 0))
        assert sol == Assignment((), 0.0)


class TestMurty:
    def test_k1_equals_optimal(self):
        rng = np.random.default_rng(3)
        entries = random_matrix(rng, 3, 5)
        c = CostMatrix(entries, 2)
        assert murty_kbest(c, 1) == [solve_optimal(c)]

    def test_two_by_two_both_permutations(self):
        sols = murty_kbest(CostMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]), 0), 2)
        assert [s.total_cost for s in sols] == pytest.approx([2.0, 4.0])

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            murty_kbest(CostMatrix(np.array([[1.0]]), 0), 0)

    def test_top20_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            entries = random_matrix(rng, 3, 6)
            sols = murty_kbest(CostMatrix(entries, 3), 20)
            oracle = sorted(enumerate_assignments(entries), key=lambda ac: ac[1])[:20]
            got = Counter(
                (s.row_to_column, round(s.total_cost, 9)) for s in sols
            )
            want = Counter((cols, round(cost, 9)) for cols, cost in oracle)
            assert got == want

    def test_exhaustive_enumeration(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(m, 9))
            entries = random_matrix(rng, m, n)
            oracle = enumerate_assignments(entries)
            sols = murty_kbest(CostMatrix(entries, n - m), len(oracle) + 10)
            assert len(sols) == len(oracle)
            got = Counter(
                (s.row_to_column, round(s.total_cost, 9)) for s in sols
            )
            want = Counter((cols, round(cost, 9)) for cols, cost in oracle)
            assert got == want

    def test_costs_nondecreasing_no_duplicates(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            entries = random_matrix(rng, 4, 8)
            sols = murty_kbest(CostMatrix(entries, 4), 30)
            costs = [s.total_cost for s in sols]
            assert costs == sorted(costs)
            assert len({s.row_to_column for s in sols}) == len(sols)

    def test_row_shift_translation_invariance(self):
        rng = np.random.default_rng(17)
        entries = random_matrix(rng, 3, 6, p_inf=0.0)
        shifted = entries.copy()
        shifted[1] += 7.5
        a = murty_kbest(CostMatrix(entries, 3), 10)
        b = murty_kbest(CostMatrix(shifted, 3), 10)
        assert [s.row_to_column for s in a] == [s.row_to_column for s in b]
        for sa, sb in zip(a, b):
            assert sb.total_cost == pytest.approx(sa.total_cost + 7.5)

    def test_deterministic(self):
        rng = np.random.default_rng(21)
        entries = random_matrix(rng, 4, 7)
        c = CostMatrix(entries, 3)
        assert murty_kbest(c, 15) == murty_kbest(c, 15)

    def test_sentinel_pairings_rejected(self):
        # row 1 has no finite column at all: infeasible, not merely expensive
        entries = np.array([[1.0, SENTINEL_COST], [SENTINEL_COST, SENTINEL_COST + 1]])
        with pytest.raises(InfeasibleAssignmentError):
            murty_kbest(CostMatrix(entries, 0), 5)

    def test_sentinel_alternative_skipped(self):
        # the sentinel diagonal would be cheaper than crossing; it must be
        # excluded so only the finite assignment remains
        entries = np.array([[1.0, SENTINEL_COST], [2.0, 3.0]])
        sols = murty_kbest(CostMatrix(entries, 0), 5)
        assert len(sols) == 1
        assert sols[0].row_to_column == (0, 1)
        assert math.isfinite(sols[0].total_cost)
