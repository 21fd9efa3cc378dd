"""Optimal and k-best rectangular linear assignment.

Cost matrices have one row per observation and columns split into an
old-track block followed by a diagonal new-object block. Forbidden pairings
carry infinite (or sentinel >= SENTINEL_COST) entries. The inner optimal
solver is the shortest-augmenting-path method of scipy; the k-best
enumeration partitions around each solution in row order, which makes the
output deterministic.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "SENTINEL_COST",
    "CostMatrix",
    "Assignment",
    "InfeasibleAssignmentError",
    "solve_optimal",
    "murty_kbest",
]

#: entries at or above this value mark forbidden pairings
SENTINEL_COST = 1e9


class InfeasibleAssignmentError(ValueError):
    """No assignment avoids all forbidden entries."""


@dataclass(frozen=True)
class CostMatrix:
    """M x (M + n_o) matrix of negative log weights."""

    entries: np.ndarray
    old_track_count: int

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if (e >= SENTINEL_COST).any():
            e = np.where(e >= SENTINEL_COST, np.inf, e)
        object.__setattr__(self, "entries", e)
        e.setflags(write=False)
        m, n = e.shape
        if n != self.old_track_count + m:
            raise ValueError(
                f"expected {m} + {self.old_track_count} columns, got {n}"
            )

    @property
    def rows(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Assignment:
    """One row -> column map with its total cost."""

    row_to_column: tuple[int, ...]
    total_cost: float


def _solve_entries(entries: np.ndarray) -> Assignment | None:
    """Optimal assignment of every row, or None when infeasible."""
    if entries.shape[0] == 0:
        return Assignment((), 0.0)
    try:
        rows, cols = linear_sum_assignment(entries)
    except ValueError:
        return None
    cost = float(entries[rows, cols].sum())
    if not np.isfinite(cost):
        return None
    mapping = np.empty(entries.shape[0], dtype=int)
    mapping[rows] = cols
    return Assignment(tuple(int(c) for c in mapping), cost)


def solve_optimal(c: CostMatrix) -> Assignment:
    result = _solve_entries(c.entries)
    if result is None:
        raise InfeasibleAssignmentError("no feasible assignment exists")
    return result


def murty_kbest(c: CostMatrix, k: int) -> list[Assignment]:
    """The up-to-k lowest-cost assignments in nondecreasing cost order.

    Each dequeued solution is partitioned in row order: subproblem i keeps
    the parent's pairings for rows < i fixed and forbids the pairing of
    row i. Subproblem solution spaces are disjoint, so no deduplication is
    needed.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    best = _solve_entries(c.entries)
    if best is None:
        raise InfeasibleAssignmentError("no feasible assignment exists")

    results: list[Assignment] = []
    counter = itertools.count()
    # heap holds (cost lower bound, tiebreak, solution or None, entries);
    # subproblems are pushed unsolved with their parent's optimum as the
    # bound and solved lazily when popped, which skips most solves
    heap = [(best.total_cost, next(counter), best, c.entries)]
    while heap and len(results) < k:
        _, _, sol, entries = heapq.heappop(heap)
        if sol is None:
            sol = _solve_entries(entries)
            if sol is not None:
                heapq.heappush(heap, (sol.total_cost, next(counter), sol, entries))
            continue
        results.append(sol)
        if len(results) == k:
            break
        work = entries.copy()
        bound = sol.total_cost
        for row in range(c.rows):
            col = sol.row_to_column[row]
            # only partition rows with an alternative finite pairing left
            if np.isfinite(work[row]).sum() > 1:
                forbidden = work.copy()
                forbidden[row, col] = np.inf
                heapq.heappush(heap, (bound, next(counter), None, forbidden))
            # fix this row's pairing before partitioning the next row
            work[row, :] = np.inf
            work[:, col] = np.inf
            work[row, col] = entries[row, col]
    return results
