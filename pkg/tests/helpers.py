"""Shared test oracles: brute-force assignment enumeration and brute-force
filter-update enumeration over all association events."""

from __future__ import annotations

import itertools
import math

import numpy as np

from rpmbm.pmbm import (
    BetaDetection,
    PoissonIntensity,
    detect_track,
    first_detection,
    misdetect_track,
)


def enumerate_assignments(entries: np.ndarray) -> list[tuple[tuple[int, ...], float]]:
    """All feasible row->column injections with their total costs."""
    m, n = entries.shape
    out = []
    if m == 0:
        return [((), 0.0)]
    for cols in itertools.permutations(range(n), m):
        cost = float(entries[range(m), list(cols)].sum())
        if math.isfinite(cost):
            out.append((cols, cost))
    return out


def brute_force_child_log_weights(
    tracks,
    Z: np.ndarray,
    poisson: PoissonIntensity,
    obs,
    clutter_density: float,
    detection=BetaDetection(),
) -> list[float]:
    """Unnormalized log weight of every association event.

    An event maps each observation to either a new object / clutter (-1) or
    to a distinct old track; unassigned tracks are misdetected.
    """
    M = Z.shape[0]
    n = len(tracks)
    miss = [misdetect_track(tr, detection)[0] for tr in tracks]
    det = [
        [detect_track(tr, z, obs, detection)[0] for tr in tracks] for z in Z
    ]
    first = [
        first_detection(poisson, z, obs, clutter_density, detection)[0] for z in Z
    ]
    out = []
    for assign in itertools.product(range(-1, n), repeat=M):
        used = [a for a in assign if a >= 0]
        if len(set(used)) != len(used):
            continue
        lw = 0.0
        for m, a in enumerate(assign):
            lw += first[m] if a < 0 else det[m][a]
        for i in range(n):
            if i not in assign:
                lw += miss[i]
        if lw > -math.inf:
            out.append(lw)
    return out


def normalized(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    m = lw.max()
    w = np.exp(lw - m)
    return w / w.sum()
