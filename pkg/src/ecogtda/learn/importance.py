"""Importance aggregation across variants, mutual information and correlation."""

import csv
from dataclasses import dataclass

import numpy as np

from ..errors import MismatchedFeatureSets

MI_BINS = 8


def dense_rank_desc(values):
    """Rank 1 for the largest value; equal values share a rank, no gaps."""
    values = np.asarray(values, dtype=np.float64)
    uniq = np.unique(values)[::-1]
    return np.searchsorted(-uniq, -values) + 1


@dataclass
class ImportanceTable:
    feature_ids: np.ndarray
    importances: np.ndarray  # features x variants
    ranks: np.ndarray  # features x variants
    avg_imp: np.ndarray
    avg_rank: np.ndarray
    variants: tuple

    def top(self, n):
        return self.feature_ids[:n]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = ["feature_id"]
            for v in self.variants:
                head += [f"imp_{v}", f"rank_{v}"]
            w.writerow(head + ["avg_imp", "avg_rank"])
            for i, fid in enumerate(self.feature_ids):
                row = [int(fid)]
                for j in range(len(self.variants)):
                    row += [repr(float(self.importances[i, j])), int(self.ranks[i, j])]
                w.writerow(row + [repr(float(self.avg_imp[i])), repr(float(self.avg_rank[i]))])


def rank_aggregate(per_variant):
    """Combine ``{variant: (feature_ids, importances)}`` into one sorted table.

    Features are ranked densely within each variant, then ordered by mean rank
    ascending, mean importance descending and feature id ascending.
    """
    variants = tuple(per_variant)
    if not variants:
        raise ValueError("no variants given")
    ref_ids = None
    cols = []
    for v in variants:
        ids, imp = per_variant[v]
        ids = np.asarray(ids, dtype=np.int64)
        order = np.argsort(ids, kind="stable")
        if ref_ids is None:
            ref_ids = ids[order]
        elif not np.array_equal(ref_ids, ids[order]):
            raise MismatchedFeatureSets(f"variant {v!r} has a different feature set")
        cols.append(np.asarray(imp, dtype=np.float64)[order])
    imps = np.column_stack(cols)
    ranks = np.column_stack([dense_rank_desc(c) for c in cols])
    avg_rank = ranks.mean(axis=1)
    avg_imp = imps.mean(axis=1)
    order = np.lexsort((ref_ids, -avg_imp, avg_rank))
    return ImportanceTable(ref_ids[order], imps[order], ranks[order], avg_imp[order],
                           avg_rank[order], variants)


def quantile_bins(x, bins=MI_BINS):
    """Bin codes from empirical quantile edges; ties fall in the same bin."""
    x = np.asarray(x, dtype=np.float64)
    edges = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    return np.searchsorted(edges, x, side="right")


def mutual_information(x, y, bins=MI_BINS):
    """Plug-in MI (nats) between a quantile-binned feature and discrete labels."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape[0] != y.shape[0]:
        raise ValueError("x and y must have the same length")
    bx = quantile_bins(x, bins)
    _, by = np.unique(y, return_inverse=True)
    joint = np.zeros((bins, by.max() + 1))
    np.add.at(joint, (bx, by), 1.0)
    joint /= joint.sum()
    if (joint.sum(axis=1) > 0).sum() < 2 or (joint.sum(axis=0) > 0).sum() < 2:
        return 0.0  # a constant feature or label carries no information
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def mutual_information_all(X, y, bins=MI_BINS):
    return np.array([mutual_information(X[:, j], y, bins) for j in range(X.shape[1])])


def correlation_matrix(X):
    """Pearson correlations; a constant column correlates 0 with others and 1 with itself."""
    X = np.asarray(X, dtype=np.float64)
    Z = X - X.mean(axis=0)
    norms = np.sqrt((Z**2).sum(axis=0))
    live = norms > 0
    Z[:, live] /= norms[live]
    Z[:, ~live] = 0.0
    C = np.clip(Z.T @ Z, -1.0, 1.0)
    np.fill_diagonal(C, 1.0)
    return C
