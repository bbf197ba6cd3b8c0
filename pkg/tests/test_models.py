import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecogtda.errors import DegenerateVariance, NotTreeBased
from ecogtda.learn import (GaussianNB, GbParams, GnbParams, GradientBoosting, RandomForest, RfParams,
                           cross_validate, impurity_importance, make_model, predict_gnb,
                           train_gnb, train_gradient_boosting, train_random_forest)


def blobs(seed=0, per_class=(30, 30, 30, 30), d=5, sep=10.0):
    """Unit-variance blobs whose centers sit ``sep`` apart along one random axis."""
    r = np.random.default_rng(seed)
    axis = r.integers(d)
    X = r.normal(size=(sum(per_class), d))
    y = np.repeat(np.arange(len(per_class)), per_class)
    X[:, axis] += sep * y
    return X, y


def xor(n=400, seed=0):
    r = np.random.default_rng(seed)
    X = r.uniform(-1, 1, size=(n, 2))
    return X, ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)


# -- Gaussian naive Bayes ---------------------------------------------------------------------


def test_gnb_separated_1d():
    m = train_gnb(np.array([[-5.0], [-4.0], [4.0], [5.0]]), ["A", "A", "B", "B"])
    assert predict_gnb(m, np.array([[4.5]]))[0] == "B"


def test_gnb_midpoint_tie_to_lower_class():
    m = train_gnb(np.array([[-1.0], [-3.0], [1.0], [3.0]]), [0, 0, 1, 1])
    assert m.predict(np.array([[0.0]]))[0] == 0


def test_gnb_matches_closed_form():
    X = np.array([[0.0, 1.0], [2.0, 5.0], [10.0, -1.0], [14.0, 3.0]])
    y = np.array([0, 0, 1, 1])
    s = 1e-3
    m = GaussianNB(GnbParams(var_smoothing=s)).fit(X, y)
    eps = s * X.var(axis=0).max()
    q = np.array([3.0, 2.0])
    out = []
    for c in (0, 1):
        mu = X[y == c].mean(axis=0)
        var = X[y == c].var(axis=0) + eps
        ll = math.log(0.5) + sum(-0.5 * math.log(2 * math.pi * v) - (qq - mm) ** 2 / (2 * v)
                                 for qq, mm, v in zip(q, mu, var))
        out.append(ll)
    np.testing.assert_allclose(m.joint_log_likelihood(q[None, :])[0], out, rtol=0, atol=1e-9)


def test_gnb_degenerate_only_without_smoothing():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [2.0, 0.0], [2.0, 1.0]])
    y = [0, 0, 1, 1]
    with pytest.raises(DegenerateVariance):
        GaussianNB(GnbParams(var_smoothing=0.0)).fit(X, y)
    GaussianNB().fit(X, y)


# -- random forest ------------------------------------------------------------------------------


def test_rf_blobs_perfect_cv():
    X, y = blobs()
    rep = cross_validate("rf", RfParams(), X, y, 5, seed=0)
    assert rep.mean == 1.0 and rep.std == 0.0


def test_rf_shuffled_labels_near_chance():
    accs = []
    for seed in range(10):
        X, y = blobs(seed, d=8)
        y = np.random.default_rng(seed).permutation(y)
        accs.append(cross_validate("rf", RfParams(n_estimators=50), X, y, 5, seed=seed).mean)
    assert abs(np.mean(accs) - 0.30) <= 0.15


def test_stump_cannot_learn_xor():
    X, y = xor()
    m = train_random_forest(X, y, RfParams(max_depth=1, n_estimators=1, max_features=1.0), seed=0)
    assert np.mean(m.predict(X) == y) <= 0.75


def test_rf_deterministic():
    X, y = blobs(2, sep=2.0)
    a = RandomForest(RfParams(), seed=5).fit(X, y)
    b = RandomForest(RfParams(), seed=5).fit(X, y)
    np.testing.assert_array_equal(a.votes(X), b.votes(X))
    np.testing.assert_array_equal(a.feature_importances(), b.feature_importances())


def test_rf_respects_max_depth():
    X, y = blobs(1, sep=1.0)
    m = RandomForest(RfParams(max_depth=2, n_estimators=5)).fit(X, y)
    # depth 2 gives at most 7 nodes per tree
    assert len(m.feat_) <= 5 * 7


@pytest.mark.parametrize("bad", [dict(criterion="mse"), dict(max_features=0.0),
                                 dict(max_features=1.5), dict(n_estimators=0), dict(max_depth=0)])
def test_rf_param_validation(bad):
    with pytest.raises(ValueError):
        RfParams(**bad)


# -- gradient boosting ------------------------------------------------------------------------------


def test_gb_blobs_perfect_cv():
    X, y = blobs()
    assert cross_validate("gb", GbParams(n_estimators=30), X, y, 5, seed=0).mean == 1.0


def test_gb_empty_ensemble_predicts_majority():
    X, y = blobs(per_class=(10, 40, 20, 20))
    m = train_gradient_boosting(X, y, GbParams(n_estimators=0))
    assert np.all(m.predict(X) == 1)


@pytest.mark.parametrize("crit", ["mse", "friedman_mse"])
def test_gb_training_loss_non_increasing(crit):
    X, y = blobs(3, sep=2.0)
    m = GradientBoosting(GbParams(n_estimators=60, criterion=crit)).fit(X, y)
    assert np.all(np.diff(m.train_loss_) <= 1e-12)


def test_gb_subsample_deterministic():
    X, y = blobs(4, sep=2.0)
    p = GbParams(n_estimators=20, subsample=0.5)
    a = GradientBoosting(p, seed=9).fit(X, y).decision_function(X)
    b = GradientBoosting(p, seed=9).fit(X, y).decision_function(X)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("bad", [dict(criterion="gini"), dict(subsample=0.0), dict(learning_rate=0.0),
                                 dict(n_estimators=-1)])
def test_gb_param_validation(bad):
    with pytest.raises(ValueError):
        GbParams(**bad)


# -- importance ----------------------------------------------------------------------------------------


def planted(seed, n=200, p=10, k=3):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, p))
    y = (X[:, k] > 0).astype(int) + (X[:, k] > 1).astype(int)
    return X, y


@pytest.mark.parametrize("kind", ["rf", "gb"])
def test_planted_feature_dominates(kind):
    X, y = planted(0)
    params = RfParams(max_features=1.0) if kind == "rf" else GbParams(n_estimators=30)
    imp = impurity_importance(make_model(kind, params, seed=1).fit(X, y))
    assert imp[3] > 0.8


@pytest.mark.parametrize("kind", ["rf", "gb"])
def test_noise_features_get_small_importance(kind):
    p = 10
    total = np.zeros(p)
    for seed in range(5):
        r = np.random.default_rng(seed)
        X = r.normal(size=(150, p))
        y = r.integers(0, 3, 150)
        params = RfParams(n_estimators=30) if kind == "rf" else GbParams(n_estimators=10)
        total += impurity_importance(make_model(kind, params, seed=seed).fit(X, y))
    assert np.all(total / 5 < 2.0 / p)


def test_importance_sums_to_one_and_zero_when_unused():
    X, y = planted(1)
    X = np.hstack([X, np.zeros((X.shape[0], 1))])  # a constant column is never split on
    for kind in ("rf", "gb"):
        imp = impurity_importance(make_model(kind, None, seed=0).fit(X, y))
        assert abs(imp.sum() - 1.0) < 1e-9
        assert np.all(imp >= 0) and imp[-1] == 0.0


def test_importance_needs_tree_model():
    X, y = planted(2)
    with pytest.raises(NotTreeBased):
        impurity_importance(GaussianNB().fit(X, y))


# -- invariances -----------------------------------------------------------------------------------------


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["rf", "gb"]))
def test_column_order_invariance(seed, kind):
    X, y = blobs(seed % 1000, sep=3.0)
    perm = np.random.default_rng(seed).permutation(X.shape[1])
    ids = np.arange(X.shape[1])
    a = make_model(kind, None, seed=3).fit(X, y, ids)
    b = make_model(kind, None, seed=3).fit(X[:, perm], y, ids[perm])
    np.testing.assert_array_equal(a.predict(X), b.predict(X[:, perm]))


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["rf", "gb"]))
def test_monotone_transform_keeps_splits(seed, kind):
    # split choice depends only on the order of values, so x -> x**3 grows the
    # same trees; thresholds are midpoints, so values a tree never saw can be
    # routed differently. Forest trees miss their out-of-bag rows, so only
    # boosting (every row seen at subsample=1) must agree on training rows.
    r = np.random.default_rng(seed)
    X = r.normal(size=(80, 4))
    y = (X[:, 0] + 0.5 * r.normal(size=80) > 0).astype(int)
    a = make_model(kind, None, seed=1).fit(X, y)
    b = make_model(kind, None, seed=1).fit(X**3, y)
    np.testing.assert_array_equal(a.feat_, b.feat_)
    if kind == "gb":
        np.testing.assert_array_equal(a.predict(X), b.predict(X**3))
    np.testing.assert_allclose(a.feature_importances(), b.feature_importances(), rtol=1e-12, atol=1e-15)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["rf", "gb", "gnb"]),
       st.sampled_from(["gini", "entropy"]))
def test_relabeling_permutes_predictions(seed, kind, crit):
    X, y = blobs(seed % 1000, sep=4.0)
    perm = np.random.default_rng(seed).permutation(4)
    params = RfParams(criterion=crit, n_estimators=31) if kind == "rf" else None
    a = make_model(kind, params, seed=2).fit(X, y).predict(X)
    b = make_model(kind, params, seed=2).fit(X, perm[y]).predict(X)
    np.testing.assert_array_equal(perm[a], b)
