"""Textbook persistence, kept deliberately naive as a cross-check.

Everything here is plain Python: its own distances, no filtration cap during
enumeration, the full boundary matrix in filtration order, and left-to-right
column reduction with no clearing, twist or apparent pairs.
"""

import itertools
import math

import numpy as np

from ..errors import DimensionUnsupported, TooLargeForOracle

MAX_POINTS = 16


def _dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


def brute_force_persistence(cloud, max_dim=1, drop_zero=True):
    from . import PersistenceDiagram, _canonical

    if max_dim not in (0, 1):
        raise DimensionUnsupported(f"max_dim must be 0 or 1, got {max_dim}")
    pts = np.asarray(getattr(cloud, "points", cloud), dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n > MAX_POINTS:
        raise TooLargeForOracle(f"oracle handles at most {MAX_POINTS} points, got {n}")
    rows = [list(map(float, p)) for p in pts]
    d = [[_dist(rows[i], rows[j]) for j in range(n)] for i in range(n)]
    cap = min(max(r) for r in d) if n else 0.0

    simplices = []
    for k in range(max_dim + 2):
        for s in itertools.combinations(range(n), k + 1):
            value = max((d[a][b] for a, b in itertools.combinations(s, 2)), default=0.0)
            simplices.append((value, k, s))
    simplices.sort()
    index = {s: i for i, (_, _, s) in enumerate(simplices)}

    columns = []
    for _, k, s in simplices:
        if k == 0:
            columns.append(set())
        else:
            columns.append({index[f] for f in itertools.combinations(s, k)})

    low_owner = {}
    paired = set()
    pairs = {k: [] for k in range(max_dim + 1)}
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            if low not in low_owner:
                break
            col ^= columns[low_owner[low]]
        if col:
            low = max(col)
            low_owner[low] = j
            paired.update((low, j))
            bval, bdim, _ = simplices[low]
            if bdim <= max_dim:
                pairs[bdim].append((bval, simplices[j][0]))

    for i, (value, k, _) in enumerate(simplices):
        if i not in paired and k <= max_dim:
            pairs[k].append((value, cap))

    return PersistenceDiagram(tuple(_canonical(pairs[k], drop_zero) for k in range(max_dim + 1)), cap)
