import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpci.data import Dataset
from cpci.models import (
    CLASSIFIERS,
    KNNClassifier,
    KNNRegressor,
    OLSRegressor,
    OneClassError,
    RandomClassifier,
    Standardizer,
    TieBrokenClassifier,
    fit_knn_classifier,
    fit_logistic,
    fit_ols,
    logistic_gradient,
    logistic_log_likelihood,
    model_from_dict,
    standardize,
)


def test_ols_exact_line():
    x = np.arange(10.0)
    model = OLSRegressor().fit(x.reshape(-1, 1), 2 * x + 1)
    assert abs(model.coef_[0] - 2) < 1e-8 and abs(model.intercept_ - 1) < 1e-8


def test_ols_constant_outcome():
    X = np.random.default_rng(0).standard_normal((30, 3))
    model = OLSRegressor().fit(X, np.full(30, 5.0))
    assert abs(model.intercept_ - 5) < 1e-8 and np.max(np.abs(model.coef_)) < 1e-8


def test_ols_residual_orthogonality(rng):
    X = rng.standard_normal((200, 4))
    y = X @ [1.0, -2.0, 0.5, 3.0] + rng.standard_normal(200)
    model = OLSRegressor().fit(X, y)
    r = y - model.predict(X)
    A = np.column_stack([np.ones(200), X])
    assert np.max(np.abs(A.T @ r)) < 1e-6


def test_ols_needs_enough_rows():
    with pytest.raises(ValueError):
        OLSRegressor().fit(np.zeros((2, 3)), np.zeros(2))


def test_ols_nonzero_only(rng):
    X = rng.standard_normal((100, 1))
    y = np.where(X[:, 0] > 0, 3.0 + X[:, 0], 0.0)
    model = fit_ols(Dataset(X, y), nonzero_only=True)
    assert abs(model.coef_[0] - 1) < 1e-8 and abs(model.intercept_ - 3) < 1e-8


def test_logistic_no_signal(rng):
    X = rng.standard_normal((20000, 2))
    y = np.tile([0.0, 1.0], 10000)
    p = fit_logistic(Dataset(X, y)).predict_proba(rng.standard_normal((50, 2)))
    assert np.all(np.abs(p - 0.5) < 0.02)


def test_logistic_separable_monotone():
    x = np.linspace(-3, 3, 40).reshape(-1, 1)
    y = (x[:, 0] > 0).astype(float)
    model = fit_logistic(Dataset(x, y))
    p = model.predict_proba(np.linspace(-5, 5, 101).reshape(-1, 1))
    assert np.all((p >= 0) & (p <= 1)) and np.all(np.diff(p) >= 0)


def test_logistic_gradient_matches_finite_differences(rng):
    A = np.column_stack([np.ones(300), rng.standard_normal((300, 3))])
    labels = (rng.random(300) < 0.4).astype(float)
    for theta in (np.zeros(4), rng.standard_normal(4)):
        h = 1e-6
        fd = np.array([
            (logistic_log_likelihood(theta + h * e, A, labels, 0.1) - logistic_log_likelihood(theta - h * e, A, labels, 0.1)) / (2 * h)
            for e in np.eye(4)
        ])
        assert np.max(np.abs(fd - logistic_gradient(theta, A, labels, 0.1))) < 1e-4


def test_logistic_optimum_has_small_gradient(rng):
    X = rng.standard_normal((500, 3))
    y = (X @ [1.0, -1.0, 0.5] + rng.logistic(size=500) > 0).astype(float)
    model = fit_logistic(Dataset(X, y))
    Z = model.standardizer.transform(X)
    A = np.column_stack([np.ones(500), Z])
    theta = np.concatenate([[model.intercept_], model.coef_])
    assert np.max(np.abs(logistic_gradient(theta, A, y, model.ridge))) < 1e-6


def test_logistic_one_class():
    with pytest.raises(OneClassError):
        fit_logistic(Dataset(np.zeros((5, 1)) + np.arange(5)[:, None], np.zeros(5)))


def brute_force_knn(train_Z, targets, query_Z, k):
    out = []
    for q in query_Z:
        d = ((train_Z - q) ** 2).sum(axis=1)
        order = sorted(range(len(d)), key=lambda i: (d[i], i))
        out.append(np.mean(targets[order[:k]]))
    return np.array(out)


@given(st.integers(2, 20), st.integers(1, 3), st.data())
def test_knn_matches_sort_oracle(n, d, data):
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 1000))
    rng = np.random.default_rng(seed)
    # coarse grid values create many distance ties
    X = rng.integers(-2, 3, size=(n, d)).astype(float)
    y = rng.integers(0, 3, size=n).astype(float)
    Q = rng.integers(-2, 3, size=(7, d)).astype(float)
    reg = KNNRegressor(k, standardize=False).fit(X, y)
    assert np.allclose(reg.predict(Q), brute_force_knn(X, y, Q, k), rtol=0, atol=1e-12)
    clf = KNNClassifier(k, standardize=False).fit(X, y)
    assert np.allclose(clf.predict_proba(Q), brute_force_knn(X, (y != 0).astype(float), Q, k), atol=1e-12)


def test_knn_k_equals_n(rng):
    X = rng.standard_normal((30, 2))
    y = (rng.random(30) < 0.3) * 1.0
    p = KNNClassifier(30).fit(X, y).predict_proba(rng.standard_normal((5, 2)))
    assert np.allclose(p, np.mean(y != 0))


def test_knn_self_query(rng):
    X = rng.standard_normal((25, 2))
    y = rng.exponential(size=25)
    assert np.allclose(KNNRegressor(1).fit(X, y).predict(X), y)


def test_knn_default_k_and_range(rng):
    X = rng.standard_normal((50, 2))
    assert fit_knn_classifier(Dataset(X, np.zeros(50))).k == 8
    with pytest.raises(ValueError):
        KNNRegressor(51).fit(X, np.zeros(50))


def test_knn_chunking_does_not_change_output(rng):
    X = rng.standard_normal((60, 2))
    y = rng.exponential(size=60)
    Q = rng.standard_normal((40, 2))
    full = KNNRegressor(5).fit(X, y).predict(Q)
    small = KNNRegressor(5).fit(X, y)
    small.max_chunk_elements = 130
    # only the BLAS summation blocking differs
    assert np.allclose(small.predict(Q), full, rtol=0, atol=1e-12)


def test_standardizer(rng):
    X = rng.normal(3.0, 2.0, size=(100, 3))
    state, transform = standardize(Dataset(X, np.zeros(100)))
    Z = transform(X)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-10) and np.allclose(Z.var(axis=0), 1, atol=1e-10)
    X_test = rng.normal(10.0, 1.0, size=(5, 3))
    assert np.allclose(transform(X_test), (X_test - X.mean(axis=0)) / X.std(axis=0))


def test_standardizer_drops_constant_column(rng):
    X = np.column_stack([rng.standard_normal(20), np.ones(20)])
    with pytest.warns(RuntimeWarning):
        state = Standardizer().fit(X)
    assert state.transform(X).shape == (20, 1)


def test_probabilities_in_unit_interval(rng):
    X = rng.standard_normal((200, 3))
    y = np.where(rng.random(200) < 0.5, 0.0, 1.0)
    train = Dataset(X, y)
    Q = rng.standard_normal((100, 3)) * 10
    for name, make in CLASSIFIERS.items():
        p = make(train, seed=1).predict_proba(Q)
        assert np.all((p >= 0) & (p <= 1)), name


def test_tie_breaking_preserves_order_and_separates_ties(rng):
    X = rng.standard_normal((100, 2))
    y = (rng.random(100) < 0.5) * 1.0
    base = KNNClassifier(10).fit(X, y)
    wrapped = TieBrokenClassifier(base)
    Q = rng.standard_normal((300, 2))
    p, w = base.predict_proba(Q), wrapped.predict_proba(Q)
    assert np.all(np.abs(p - w) <= 1e-9)
    strictly = p[:, None] < p[None, :]
    assert np.all((w[:, None] < w[None, :])[strictly])
    assert len(np.unique(w)) == 300


def test_random_classifier_ignores_labels(rng):
    X = rng.standard_normal((50, 2))
    a = RandomClassifier(3).fit(X, np.zeros(50)).predict_proba(X)
    b = RandomClassifier(3).fit(X, np.ones(50)).predict_proba(X)
    assert np.array_equal(a, b)


def test_model_dict_round_trip(rng):
    X = rng.standard_normal((80, 2))
    y = np.where(X[:, 0] > 0, X[:, 0], 0.0)
    train = Dataset(X, y)
    Q = rng.standard_normal((10, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for model in (fit_ols(train), fit_logistic(train), *(make(train, seed=2) for make in CLASSIFIERS.values())):
            clone = model_from_dict(model.to_dict())
            fn = "predict_proba" if hasattr(model, "predict_proba") else "predict"
            assert np.array_equal(getattr(clone, fn)(Q), getattr(model, fn)(Q))
    with pytest.raises(ValueError):
        model_from_dict({"kind": "tree"})
