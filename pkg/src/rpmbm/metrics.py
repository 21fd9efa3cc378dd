"""OSPA multi-object error between point sets."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["ospa", "ospa_components"]


def ospa(X, Y, c: float = 100.0, p: float = 1.0) -> float:
    """Optimal sub-pattern assignment distance of order p with cutoff c.

    X and Y are sequences of position vectors (possibly empty). Distances are
    Euclidean, truncated at c; the smaller set is padded with cardinality
    penalty c per missing point.
    """
    total, _, _ = ospa_components(X, Y, c, p)
    return total


def ospa_components(X, Y, c: float = 100.0, p: float = 1.0):
    """(total, localization, cardinality) decomposition of the OSPA error."""
    if c <= 0:
        raise ValueError(f"cutoff c must be positive, got {c}")
    if p < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    X = [np.asarray(x, dtype=float) for x in X]
    Y = [np.asarray(y, dtype=float) for y in Y]
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0, 0.0, 0.0
    if m == 0:
        return c, 0.0, c
    d = np.linalg.norm(
        np.stack(X)[:, None, :] - np.stack(Y)[None, :, :], axis=-1
    )
    d = np.minimum(d, c) ** p
    rows, cols = linear_sum_assignment(d)
    loc_sum = float(d[rows, cols].sum())
    card_sum = c**p * (n - m)
    total = ((loc_sum + card_sum) / n) ** (1.0 / p)
    return total, (loc_sum / n) ** (1.0 / p), (card_sum / n) ** (1.0 / p)
