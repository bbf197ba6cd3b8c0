"""Stratified k-fold cross-validation."""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ClassTooSmall
from .models import make_model


def stratified_kfold(y, k=5, seed=0):
    """Return a list of ``(train_idx, test_idx)`` pairs.

    Each class is shuffled with a seeded generator and dealt round-robin into
    the k folds, so every fold holds either floor or ceil of n_c / k members of
    class c. Indices inside each fold are sorted.
    """
    y = np.asarray(y)
    k = int(k)
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    small = classes[counts < k]
    if small.size:
        raise ClassTooSmall(f"classes {small.tolist()} have fewer than k={k} samples")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        fold_of[members] = (offset + np.arange(len(members))) % k
        offset += len(members)
    splits = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        splits.append((train, test))
    return splits


@dataclass
class CvReport:
    fold_accuracies: list
    seed: int = 0
    model: str = ""
    params: dict = field(default_factory=dict)

    @property
    def folds(self):
        return len(self.fold_accuracies)

    @property
    def mean(self):
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self):
        return float(np.std(self.fold_accuracies))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fold", "accuracy"])
            for i, a in enumerate(self.fold_accuracies):
                w.writerow([i, repr(float(a))])
            w.writerow(["mean", repr(self.mean)])
            w.writerow(["std", repr(self.std)])


def cross_validate(kind, params, X, y, k=5, seed=0, feature_ids=None, model_seed=None, executor=None):
    """Mean accuracy over stratified folds; the same ``seed`` gives the same folds."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        warnings.warn("only one class present; accuracy is trivially 1", RuntimeWarning)
    splits = stratified_kfold(y, k, seed)
    mseed = seed if model_seed is None else model_seed

    def run(split):
        train, test = split
        model = make_model(kind, params, mseed)
        model.fit(X[train], y[train], feature_ids)
        return float(np.mean(model.predict(X[test]) == y[test]))

    if executor is None:
        accs = [run(s) for s in splits]
    else:
        accs = list(executor.map(run, splits))
    pdict = params if isinstance(params, dict) else (vars(params) if params is not None else {})
    return CvReport(accs, seed, kind, dict(pdict))
