"""Built-in classifiers and regressors.

Anything with ``predict_proba(X) -> array in [0, 1]`` (probability that the
outcome is non-zero) can act as a classifier, and anything with
``predict(X) -> array`` as a regressor. The built-ins here are small,
dependency-free learners that also serialize to plain dicts.
"""

from __future__ import annotations

import logging
import math
import warnings
from typing import Protocol, runtime_checkable

import numpy as np

from .data import Dataset

logger = logging.getLogger(__name__)


class SingularSystemError(np.linalg.LinAlgError):
    pass


class OneClassError(ValueError):
    pass


@runtime_checkable
class Classifier(Protocol):
    def predict_proba(self, X) -> np.ndarray: ...


@runtime_checkable
class Regressor(Protocol):
    def predict(self, X) -> np.ndarray: ...


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


class Standardizer:
    """Z-scores with training statistics; constant columns are dropped."""

    def __init__(self, mean=None, scale=None, keep=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=float)
        self.scale = None if scale is None else np.asarray(scale, dtype=float)
        self.keep = None if keep is None else np.asarray(keep, dtype=bool)

    def fit(self, X) -> "Standardizer":
        X = _as_matrix(X)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        keep = scale > 1e-12 * np.maximum(1.0, np.abs(mean))
        if not keep.all():
            warnings.warn(
                f"dropping constant feature columns {np.flatnonzero(~keep).tolist()}",
                RuntimeWarning,
                stacklevel=2,
            )
        self.mean, self.scale, self.keep = mean[keep], scale[keep], keep
        return self

    def transform(self, X) -> np.ndarray:
        if self.mean is None:
            raise RuntimeError("Standardizer is not fitted")
        X = _as_matrix(X)
        if X.shape[1] != self.keep.shape[0]:
            raise ValueError(f"expected {self.keep.shape[0]} features, got {X.shape[1]}")
        return (X[:, self.keep] - self.mean) / self.scale

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(), "keep": self.keep.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(d["mean"], d["scale"], d["keep"])


def standardize(train: Dataset):
    """Fit a :class:`Standardizer` on ``train`` and return it with its transform."""
    state = Standardizer().fit(train.X)
    return state, state.transform


class OLSRegressor:
    """Least squares with intercept via the normal equations."""

    kind = "ols"

    def __init__(self, stabilizer: float = 1e-10):
        self.stabilizer = stabilizer
        self.intercept_ = None
        self.coef_ = None

    def fit(self, X, y) -> "OLSRegressor":
        X = _as_matrix(X)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        if n <= d:
            raise ValueError(f"need more samples than features for OLS (n={n}, d={d})")
        A = np.column_stack([np.ones(n), X])
        gram = A.T @ A
        rhs = A.T @ y
        if np.linalg.cond(gram) > 1e12:
            gram = gram + self.stabilizer * max(np.trace(gram) / gram.shape[0], 1.0) * np.eye(d + 1)
        try:
            theta = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"normal equations are singular: {exc}") from exc
        if not np.all(np.isfinite(theta)):
            raise SingularSystemError("normal equations produced non-finite coefficients")
        self.intercept_, self.coef_ = float(theta[0]), theta[1:]
        return self

    def predict(self, X) -> np.ndarray:
        return self.intercept_ + _as_matrix(X) @ self.coef_

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intercept": self.intercept_, "coef": self.coef_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "OLSRegressor":
        model = cls()
        model.intercept_ = float(d["intercept"])
        model.coef_ = np.asarray(d["coef"], dtype=float)
        return model


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_log_likelihood(theta, A, labels, ridge: float = 0.0) -> float:
    """Mean Bernoulli log-likelihood minus ``ridge/2 * |slopes|^2``.

    ``A`` already carries the leading column of ones; the intercept
    ``theta[0]`` is not penalized.
    """
    z = A @ theta
    ll = np.mean(labels * z - np.logaddexp(0.0, z))
    return float(ll - 0.5 * ridge * np.dot(theta[1:], theta[1:]))


def logistic_gradient(theta, A, labels, ridge: float = 0.0) -> np.ndarray:
    p = _sigmoid(A @ theta)
    g = A.T @ (labels - p) / A.shape[0]
    g[1:] -= ridge * theta[1:]
    return g


class LogisticClassifier:
    """Ridge-stabilized logistic regression fitted by IRLS (damped Newton).

    Features are standardized internally; ``coef_``/``intercept_`` refer to
    the standardized scale.
    """

    kind = "logistic"

    def __init__(self, ridge: float = 1e-6, tol: float = 1e-6, max_iter: int = 200):
        self.ridge = ridge
        self.tol = tol
        self.max_iter = max_iter
        self.standardizer = None
        self.intercept_ = None
        self.coef_ = None
        self.n_iter_ = 0

    def fit(self, X, y) -> "LogisticClassifier":
        labels = (np.asarray(y, dtype=float) != 0.0).astype(float)
        if labels.min() == labels.max():
            raise OneClassError("logistic regression needs both zero and non-zero outcomes")
        self.standardizer = Standardizer().fit(X)
        Z = self.standardizer.transform(X)
        A = np.column_stack([np.ones(Z.shape[0]), Z])
        n, p = A.shape
        theta = np.zeros(p)
        theta[0] = math.log(labels.mean() / (1.0 - labels.mean()))
        penalty = np.full(p, self.ridge)
        penalty[0] = 0.0
        obj = logistic_log_likelihood(theta, A, labels, self.ridge)
        for it in range(1, self.max_iter + 1):
            grad = logistic_gradient(theta, A, labels, self.ridge)
            if np.max(np.abs(grad)) < self.tol:
                break
            prob = _sigmoid(A @ theta)
            w = prob * (1.0 - prob)
            hess = (A.T * w) @ A / n + np.diag(penalty) + 1e-12 * np.eye(p)
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, grad, rcond=None)[0]
            t = 1.0
            while t > 1e-10:
                cand = theta + t * step
                cand_obj = logistic_log_likelihood(cand, A, labels, self.ridge)
                if cand_obj >= obj:
                    break
                t *= 0.5
            else:
                break
            theta, obj = cand, cand_obj
        self.n_iter_ = it
        self.intercept_, self.coef_ = float(theta[0]), theta[1:].copy()
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.intercept_ + self.standardizer.transform(X) @ self.coef_

    def predict_proba(self, X) -> np.ndarray:
        return np.clip(_sigmoid(self.decision_function(X)), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "intercept": self.intercept_,
            "coef": self.coef_.tolist(),
            "standardizer": self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticClassifier":
        model = cls()
        model.intercept_ = float(d["intercept"])
        model.coef_ = np.asarray(d["coef"], dtype=float)
        model.standardizer = Standardizer.from_dict(d["standardizer"])
        return model


def nearest_neighbors_mask(train_Z: np.ndarray, query_Z: np.ndarray, k: int) -> np.ndarray:
    """Boolean (n_query, n_train) mask of the ``k`` nearest training rows.

    Squared Euclidean distance; among equidistant candidates the lower
    training index wins.
    """
    diff = query_Z[:, None, :] - train_Z[None, :, :]
    dist = np.einsum("qtd,qtd->qt", diff, diff)
    kth = np.partition(dist, k - 1, axis=1)[:, k - 1 : k]
    closer = dist < kth
    tied = dist == kth
    need = k - closer.sum(axis=1, keepdims=True)
    return closer | (tied & (np.cumsum(tied, axis=1) <= need))


class _KNNBase:
    # bound on the (query, train, feature) difference tensor per chunk
    max_chunk_elements = 4_000_000

    def __init__(self, k: int | None = None, standardize: bool = True):
        self.k = k
        self.standardize = standardize
        self.standardizer = None
        self.train_Z = None
        self.targets = None

    def _fit(self, X, targets):
        X = _as_matrix(X)
        n = X.shape[0]
        if n == 0:
            raise ValueError("k-NN needs at least one training sample")
        if self.k is None:
            self.k = math.ceil(math.sqrt(n))
        if not 1 <= self.k <= n:
            raise ValueError(f"k must lie in [1, {n}], got {self.k}")
        if self.standardize:
            self.standardizer = Standardizer().fit(X)
            self.train_Z = self.standardizer.transform(X)
        else:
            self.train_Z = X.copy()
        self.targets = np.asarray(targets, dtype=float)
        return self

    def _neighbor_mean(self, X) -> np.ndarray:
        Z = _as_matrix(X)
        if self.standardizer is not None:
            Z = self.standardizer.transform(Z)
        out = np.empty(Z.shape[0])
        chunk = max(1, self.max_chunk_elements // self.train_Z.size)
        for start in range(0, Z.shape[0], chunk):
            mask = nearest_neighbors_mask(self.train_Z, Z[start : start + chunk], self.k)
            out[start : start + chunk] = (mask @ self.targets) / self.k
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "standardize": self.standardize,
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "train_z": self.train_Z.tolist(),
            "targets": self.targets.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict):
        model = cls(k=int(d["k"]), standardize=bool(d["standardize"]))
        if d["standardizer"] is not None:
            model.standardizer = Standardizer.from_dict(d["standardizer"])
        model.train_Z = np.asarray(d["train_z"], dtype=float).reshape(len(d["targets"]), -1)
        model.targets = np.asarray(d["targets"], dtype=float)
        return model


class KNNClassifier(_KNNBase):
    """Share of non-zero outcomes among the ``k`` nearest training points."""

    kind = "knn_classifier"

    def fit(self, X, y) -> "KNNClassifier":
        return self._fit(X, (np.asarray(y, dtype=float) != 0.0).astype(float))

    def predict_proba(self, X) -> np.ndarray:
        return np.clip(self._neighbor_mean(X), 0.0, 1.0)


class KNNRegressor(_KNNBase):
    kind = "knn_regressor"

    def fit(self, X, y) -> "KNNRegressor":
        return self._fit(X, y)

    def predict(self, X) -> np.ndarray:
        return self._neighbor_mean(X)


class ConstantRegressor:
    """Predicts one number everywhere (the training mean unless given)."""

    kind = "constant"

    def __init__(self, value: float | None = None):
        self.value = value

    def fit(self, X, y) -> "ConstantRegressor":
        if self.value is None:
            self.value = float(np.mean(y))
        return self

    def predict(self, X) -> np.ndarray:
        return np.full(_as_matrix(X).shape[0], float(self.value))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstantRegressor":
        return cls(float(d["value"]))


class RandomClassifier:
    """Adversarial classifier whose output ignores the labels entirely.

    The probability is a deterministic hash of ``x`` that looks uniform on
    (0, 1); it exists to exercise model-agnostic coverage.
    """

    kind = "random"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.weights = None
        self.offset = None

    def fit(self, X, y=None) -> "RandomClassifier":
        rng = np.random.default_rng(self.seed)
        self.weights = rng.normal(size=_as_matrix(X).shape[1]) * 37.0
        self.offset = float(rng.uniform(0.0, 2.0 * math.pi))
        return self

    def predict_proba(self, X) -> np.ndarray:
        z = np.sin(_as_matrix(X) @ self.weights + self.offset) * 43758.5453
        return z - np.floor(z)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "weights": self.weights.tolist(), "offset": self.offset}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomClassifier":
        model = cls(d["seed"])
        model.weights = np.asarray(d["weights"], dtype=float)
        model.offset = float(d["offset"])
        return model


def feature_hash(X) -> np.ndarray:
    """Deterministic pseudo-uniform value in [0, 1) per row of ``X``."""
    X = _as_matrix(X)
    weights = np.random.default_rng(0x5EED).normal(size=X.shape[1]) * 37.0
    z = np.sin(X @ weights + 0.5) * 43758.5453
    return z - np.floor(z)


class TieBrokenClassifier:
    """Wraps a classifier whose probabilities repeat (e.g. k-NN vote shares).

    Returns ``(1 - eps) * p(x) + eps * h(x)`` with ``h`` a fixed hash of the
    features, so distinct probabilities keep their order while equal ones are
    separated. Quantile thresholds on the result then behave as for a
    continuous score.
    """

    kind = "tie_broken"

    def __init__(self, base, eps: float = 1e-9):
        self.base = base
        self.eps = eps

    def predict_proba(self, X) -> np.ndarray:
        return (1.0 - self.eps) * self.base.predict_proba(X) + self.eps * feature_hash(X)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "eps": self.eps, "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TieBrokenClassifier":
        return cls(model_from_dict(d["base"]), float(d["eps"]))


MODEL_TYPES = {
    cls.kind: cls
    for cls in (
        OLSRegressor, LogisticClassifier, KNNClassifier, KNNRegressor,
        ConstantRegressor, RandomClassifier, TieBrokenClassifier,
    )
}


def model_from_dict(d: dict):
    try:
        cls = MODEL_TYPES[d["kind"]]
    except KeyError as exc:
        raise ValueError(f"unknown model kind {d.get('kind')!r}") from exc
    return cls.from_dict(d)


def _training_rows(train: Dataset, nonzero_only: bool) -> Dataset:
    if not nonzero_only:
        return train
    mask = train.is_nonzero
    if not mask.any():
        raise ValueError("no non-zero outcomes to fit the regressor on")
    return train.subset(mask)


def fit_ols(train: Dataset, nonzero_only: bool = False) -> OLSRegressor:
    rows = _training_rows(train, nonzero_only)
    return OLSRegressor().fit(rows.X, rows.y)


def fit_logistic(train: Dataset, **kwargs) -> LogisticClassifier:
    return LogisticClassifier(**kwargs).fit(train.X, train.y)


def fit_knn_classifier(train: Dataset, k: int | None = None) -> KNNClassifier:
    return KNNClassifier(k).fit(train.X, train.y)


def fit_knn_regressor(train: Dataset, k: int | None = None, nonzero_only: bool = False) -> KNNRegressor:
    rows = _training_rows(train, nonzero_only)
    return KNNRegressor(k).fit(rows.X, rows.y)


CLASSIFIERS = {
    "logistic": lambda train, seed=0: fit_logistic(train),
    "knn": lambda train, seed=0: TieBrokenClassifier(fit_knn_classifier(train)),
    "random": lambda train, seed=0: RandomClassifier(seed).fit(train.X),
}

REGRESSORS = {
    "ols": lambda train, nonzero_only: fit_ols(train, nonzero_only),
    "knn": lambda train, nonzero_only: fit_knn_regressor(train, nonzero_only=nonzero_only),
    "constant": lambda train, nonzero_only: ConstantRegressor().fit(
        None, _training_rows(train, nonzero_only).y
    ),
}
