"""Vietoris-Rips persistent homology in dimensions 0 and 1.

The filtration value of a simplex is its diameter (an edge enters at its
length). Only simplices up to the enclosing radius are built: at that scale the
complex is a cone over the most central point, so every finite class has died
and the essential H0 class is reported as ``(0, cap)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..errors import DimensionUnsupported
from . import _kernels
from .oracle import brute_force_persistence

__all__ = [
    "PersistenceDiagram",
    "distance_matrix",
    "enclosing_radius",
    "vr_persistence",
    "brute_force_persistence",
    "diagrams_close",
]


@dataclass(frozen=True)
class PersistenceDiagram:
    """Per-dimension (birth, death) multisets plus the filtration cap.

    ``intervals[k]`` is an ``(m, 2)`` array sorted by (birth, death).
    """

    intervals: tuple
    cap: float

    def __getitem__(self, k):
        if k < len(self.intervals):
            return self.intervals[k]
        return np.empty((0, 2))

    @property
    def max_dim(self):
        return len(self.intervals) - 1

    def persistences(self, k):
        pairs = self[k]
        return pairs[:, 1] - pairs[:, 0]

    def scaled(self, c):
        return PersistenceDiagram(tuple(p * c for p in self.intervals), self.cap * c)


def _points(cloud):
    pts = np.asarray(getattr(cloud, "points", cloud), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _canonical(pairs, drop_zero):
    arr = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
    if drop_zero:
        arr = arr[arr[:, 1] > arr[:, 0]]
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    return arr[order]


def distance_matrix(cloud):
    """Euclidean distance matrix; each pair is computed once so it is exactly symmetric."""
    pts = _points(cloud)
    if pts.shape[0] < 2:
        return np.zeros((pts.shape[0], pts.shape[0]))
    return squareform(pdist(pts, "euclidean"))


def enclosing_radius(dm):
    dm = np.asarray(dm, dtype=np.float64)
    if dm.shape[0] == 0:
        return 0.0
    return float(dm.max(axis=1).min())


def vr_persistence(cloud, max_dim=1, drop_zero=True):
    """Vietoris-Rips persistence diagram of a point cloud.

    H0 comes from union-find over edges sorted by length (elder rule). H1 comes
    from reducing the edge/triangle incidence matrix over GF(2), clearing the
    columns of edges that already merged components.

    ``drop_zero=False`` keeps pairs with birth == death, which is mostly useful
    for checking that H0 has exactly ``n`` classes.
    """
    if max_dim not in (0, 1):
        raise DimensionUnsupported(f"max_dim must be 0 or 1, got {max_dim}")
    pts = _points(cloud)
    n = pts.shape[0]
    dm = np.ascontiguousarray(distance_matrix(pts))
    cap = enclosing_radius(dm)

    ei, ej, ed = _kernels.enumerate_edges(dm, cap)
    order = np.argsort(ed, kind="stable")
    ei, ej, ed = ei[order], ej[order], ed[order]

    b0, d0, negative = _kernels.union_find_h0(n, ei, ej, ed, np.zeros(n))
    h0 = np.column_stack([np.append(b0, 0.0), np.append(d0, cap)]) if n else np.empty((0, 2))
    intervals = [_canonical(h0, drop_zero)]

    if max_dim >= 1:
        values, edge_rank = np.unique(ed, return_inverse=True)
        vrank = np.full((n, n), -1, np.int64)
        vrank[ei, ej] = edge_rank
        tri, key = _kernels.sorted_triangles(vrank, len(values))
        diam = values[key]
        indptr, indices = _kernels.coboundary_csr(n, ei, ej, tri)
        b1, d1, ess = _kernels.reduce_h1(ed, negative, indptr, indices, diam)
        h1 = np.concatenate([np.column_stack([b1, d1]), np.column_stack([ess, np.full(ess.shape, cap)])])
        intervals.append(_canonical(h1, drop_zero))
    return PersistenceDiagram(tuple(intervals), cap)


def diagrams_close(a, b, tol=1e-9):
    """Multiset equality of two diagrams, dimension by dimension."""
    dims = max(len(a.intervals), len(b.intervals))
    for k in range(dims):
        pa, pb = a[k], b[k]
        if pa.shape != pb.shape:
            return False
        if pa.size and not np.allclose(pa, pb, rtol=0.0, atol=tol):
            return False
    return True
