"""Gaussian naive Bayes, random forest and gradient boosting classifiers.

Labels may be any hashable values. Internally they are numbered by first
appearance in the training labels and every argmax/vote tie goes to the lower
number, so renaming the classes never changes which training rows win a tie.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DegenerateVariance, NotTreeBased
from . import _trees

_CRITERIA = {"gini": _trees.GINI, "entropy": _trees.ENTROPY,
             "mse": _trees.MSE, "friedman_mse": _trees.FRIEDMAN_MSE}
NO_DEPTH_LIMIT = 1 << 30


@dataclass
class RfParams:
    max_depth: int = 6
    n_estimators: int = 100
    criterion: str = "gini"
    max_features: float = 0.3

    def __post_init__(self):
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"random forest criterion must be gini or entropy, got {self.criterion!r}")
        if not 0 < self.max_features <= 1:
            raise ValueError("max_features must be a fraction in (0, 1]")
        if self.max_depth is not None and int(self.max_depth) < 1:
            raise ValueError("max_depth must be positive")
        if int(self.n_estimators) < 1:
            raise ValueError("n_estimators must be positive")


@dataclass
class GbParams:
    max_depth: int = 3
    n_estimators: int = 100
    criterion: str = "friedman_mse"
    subsample: float = 1.0
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.criterion not in ("mse", "friedman_mse"):
            raise ValueError(f"boosting criterion must be mse or friedman_mse, got {self.criterion!r}")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be a fraction in (0, 1]")
        if self.max_depth is not None and int(self.max_depth) < 1:
            raise ValueError("max_depth must be positive")
        if int(self.n_estimators) < 0:
            raise ValueError("n_estimators must be non-negative")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class GnbParams:
    var_smoothing: float = 1e-9

    def __post_init__(self):
        if self.var_smoothing < 0:
            raise ValueError("var_smoothing must be >= 0")


def _encode(y):
    sorted_classes, codes = np.unique(np.asarray(y), return_inverse=True)
    _, first = np.unique(codes, return_index=True)
    order = np.argsort(first)  # class numbers in order of first appearance
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    return sorted_classes[order], remap[codes].astype(np.int64)


def _check_X(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a samples x features matrix")
    if not np.isfinite(X).all():
        raise ValueError("X contains NaN or Inf")
    return X


def _feature_ids(feature_ids, p):
    if feature_ids is None:
        return np.arange(p, dtype=np.int64)
    ids = np.asarray(feature_ids, dtype=np.int64)
    if ids.shape != (p,) or len(np.unique(ids)) != p:
        raise ValueError("feature_ids must be unique and match the number of columns")
    return ids


def _depth(d):
    return NO_DEPTH_LIMIT if d is None else int(d)


# -- Gaussian naive Bayes ------------------------------------------------------


class GaussianNB:
    def __init__(self, params=GnbParams()):
        self.params = params

    def fit(self, X, y, feature_ids=None):
        X = _check_X(X)
        self.classes_, codes = _encode(y)
        k = len(self.classes_)
        self.theta_ = np.array([X[codes == c].mean(axis=0) for c in range(k)])
        var = np.array([X[codes == c].var(axis=0) for c in range(k)])
        eps = self.params.var_smoothing * X.var(axis=0).max()
        var = var + eps
        if self.params.var_smoothing == 0:
            dead = (var == 0).all(axis=0)
            if dead.any():
                raise DegenerateVariance(
                    f"features {np.flatnonzero(dead).tolist()} are constant within every class"
                )
        self.var_ = np.maximum(var, np.finfo(float).tiny)
        self.log_prior_ = np.log(np.bincount(codes, minlength=k) / len(codes))
        return self

    def joint_log_likelihood(self, X):
        X = _check_X(X)
        out = np.empty((X.shape[0], len(self.classes_)))
        for c in range(len(self.classes_)):
            ll = -0.5 * np.sum(np.log(2.0 * math.pi * self.var_[c]))
            ll = ll - 0.5 * np.sum((X - self.theta_[c]) ** 2 / self.var_[c], axis=1)
            out[:, c] = self.log_prior_[c] + ll
        return out

    def predict(self, X):
        return self.classes_[np.argmax(self.joint_log_likelihood(X), axis=1)]


# -- random forest -------------------------------------------------------------


class RandomForest:
    """Bagged CART classifiers with per-node random feature subsets; hard majority vote."""

    def __init__(self, params=RfParams(), seed=0):
        self.params = params
        self.seed = int(seed)

    def fit(self, X, y, feature_ids=None):
        X = _check_X(X)
        self.classes_, codes = _encode(y)
        p = X.shape[1]
        self.feature_ids_ = _feature_ids(feature_ids, p)
        n_cand = max(1, math.ceil(self.params.max_features * p - 1e-12))
        (self.roots_, self.feat_, self.thr_, self.left_, self.right_, self.value_,
         self._tree_importance) = _trees.fit_forest(
            X, self.feature_ids_, codes, len(self.classes_), int(self.params.n_estimators),
            _depth(self.params.max_depth), n_cand, _CRITERIA[self.params.criterion],
            np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF))
        return self

    def votes(self, X):
        return _trees.forest_votes(_check_X(X), self.roots_, self.feat_, self.thr_, self.left_,
                                   self.right_, self.value_, len(self.classes_))

    def predict(self, X):
        return self.classes_[np.argmax(self.votes(X), axis=1)]

    def feature_importances(self):
        per_tree = self._tree_importance
        sums = per_tree.sum(axis=1, keepdims=True)
        normed = np.divide(per_tree, sums, out=np.zeros_like(per_tree), where=sums > 0)
        mean = normed.mean(axis=0)
        total = mean.sum()
        return mean / total if total > 0 else mean


# -- gradient boosting ---------------------------------------------------------


class GradientBoosting:
    """Softmax gradient boosting with one regression tree per class per iteration."""

    def __init__(self, params=GbParams(), seed=0):
        self.params = params
        self.seed = int(seed)

    def fit(self, X, y, feature_ids=None):
        X = _check_X(X)
        self.classes_, codes = _encode(y)
        k = len(self.classes_)
        p = X.shape[1]
        self.feature_ids_ = _feature_ids(feature_ids, p)
        prior = np.bincount(codes, minlength=k) / len(codes)
        self.init_ = np.log(np.maximum(prior, 1e-300))
        (self.roots_, self.feat_, self.thr_, self.left_, self.right_, self.value_,
         self._tree_importance, self.train_loss_) = _trees.fit_boosting(
            X, self.feature_ids_, codes, k, int(self.params.n_estimators),
            _depth(self.params.max_depth), _CRITERIA[self.params.criterion],
            float(self.params.subsample), float(self.params.learning_rate),
            np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF), self.init_)
        return self

    def decision_function(self, X):
        return _trees.boosting_scores(_check_X(X), self.init_, self.roots_, self.feat_, self.thr_,
                                      self.left_, self.right_, self.value_, len(self.classes_),
                                      float(self.params.learning_rate))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def feature_importances(self):
        mean = self._tree_importance.mean(axis=0) if len(self._tree_importance) else np.zeros(
            len(self.feature_ids_))
        total = mean.sum()
        return mean / total if total > 0 else mean


# -- functional surface ----------------------------------------------------------


def train_gnb(X, y, p=GnbParams()):
    return GaussianNB(p).fit(X, y)


def predict_gnb(model, X):
    return model.predict(X)


def train_random_forest(X, y, p=RfParams(), seed=0, feature_ids=None):
    return RandomForest(p, seed).fit(X, y, feature_ids)


def train_gradient_boosting(X, y, p=GbParams(), seed=0, feature_ids=None):
    return GradientBoosting(p, seed).fit(X, y, feature_ids)


def predict(model, X):
    return model.predict(X)


def impurity_importance(model):
    """Mean decrease in impurity per column, normalised to sum to 1.

    A model whose trees never split returns all zeros.
    """
    if not isinstance(model, (RandomForest, GradientBoosting)):
        raise NotTreeBased(f"{type(model).__name__} has no impurity-based importance")
    return model.feature_importances()


MODEL_KINDS = {
    "rf": (RandomForest, RfParams),
    "gb": (GradientBoosting, GbParams),
    "gnb": (GaussianNB, GnbParams),
}


def make_model(kind, params=None, seed=0):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    cls, pcls = MODEL_KINDS[kind]
    if params is None:
        params = pcls()
    elif isinstance(params, dict):
        params = pcls(**params)
    if cls is GaussianNB:
        return cls(params)
    return cls(params, seed)


def params_dict(params):
    return asdict(params)
