import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cpci.data import Dataset, DataSplits

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


class FixedClassifier:
    """Returns a preset probability per row, keyed by the first feature."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def predict_proba(self, X):
        return self.probs[np.asarray(X, dtype=float)[:, 0].astype(int)]


class FixedRegressor:
    def __init__(self, preds):
        self.preds = np.asarray(preds, dtype=float)

    def predict(self, X):
        return self.preds[np.asarray(X, dtype=float)[:, 0].astype(int)]


def indexed(y, start=0):
    """Dataset whose single feature is the row id, so fixed models can look rows up."""
    y = np.asarray(y, dtype=float)
    return Dataset(np.arange(start, start + y.size, dtype=float).reshape(-1, 1), y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_splits(rng, n=400, d=3):
    X = rng.standard_normal((n, d))
    W = X @ np.arange(1, d + 1) + rng.standard_normal(n)
    t = np.quantile(W, 0.6)
    y = np.where(W > t, W - t, 0.0)
    data = Dataset(X, y)
    q = n // 4
    parts = [data.subset(slice(i * q, (i + 1) * q)) for i in range(4)]
    return DataSplits(*parts)
