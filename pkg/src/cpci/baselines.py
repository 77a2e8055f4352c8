"""Comparison procedures whose sets may be ``{0} U [lo, hi]``.

Both use the classifier's non-zero probability as the conformity score of a
zero outcome and the absolute residual for a non-zero one. The
class-conditional variant calibrates each class separately; the weighted
variant pools both kinds of score under one threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, PredictionSets, SetKind
from .models import Classifier, OneClassError, Regressor
from .quantiles import conformal_threshold
from .vci import conformity_score


def _combine(include_zero: np.ndarray, center: np.ndarray, radius: float) -> PredictionSets:
    n = center.shape[0]
    if math.isinf(radius):
        return PredictionSets(np.full(n, SetKind.UNBOUNDED, dtype=np.int8), np.full(n, np.nan), np.full(n, np.nan))
    kind = np.where(include_zero, np.int8(SetKind.ZERO_PLUS_INTERVAL), np.int8(SetKind.INTERVAL))
    # PredictionSets collapses {0} U [lo, hi] to [lo, hi] when 0 is already inside
    return PredictionSets(kind, center - radius, center + radius)


@dataclass(frozen=True)
class ClassCondCalibration:
    zero_threshold: float
    nonzero_threshold: float
    alpha: float
    classifier: Classifier
    regressor: Regressor

    def predict(self, X) -> PredictionSets:
        return classcond_predict(X, self)


def classcond_calibrate(
    cal: Dataset,
    classifier: Classifier,
    regressor: Regressor,
    alpha: float,
    interval_aware: bool = True,
) -> ClassCondCalibration:
    """Separate conformal thresholds for the zero and non-zero classes, each at ``alpha``.

    The non-zero threshold comes first. With ``interval_aware`` a zero-class
    point whose residual interval already reaches 0 gets score ``-inf``: the
    set holds 0 for it whatever the classifier says, so only the remaining
    zero-class points compete for the threshold and the zero class is
    covered at ``alpha`` rather than above it. Without it the zero-class
    scores are the raw probabilities.
    """
    zero = ~cal.is_nonzero
    if zero.all() or not zero.any():
        raise OneClassError("class-conditional calibration needs both zero and non-zero outcomes")
    t1 = conformal_threshold(conformity_score(cal.X[~zero], cal.y[~zero], regressor), alpha)
    zero_scores = classifier.predict_proba(cal.X[zero])
    if interval_aware:
        zero_scores = np.where(np.abs(regressor.predict(cal.X[zero])) <= max(t1, 0.0), -np.inf, zero_scores)
    t0 = conformal_threshold(zero_scores, alpha)
    return ClassCondCalibration(t0, t1, alpha, classifier, regressor)


def classcond_predict(X, calibration: ClassCondCalibration) -> PredictionSets:
    include_zero = calibration.classifier.predict_proba(X) <= calibration.zero_threshold
    radius = max(calibration.nonzero_threshold, 0.0)
    return _combine(include_zero, calibration.regressor.predict(X), radius)


def mixed_scores(X, y, classifier: Classifier, regressor: Regressor) -> np.ndarray:
    """``p(x)`` for zero outcomes, ``|y - f(x)|`` otherwise."""
    y = np.asarray(y, dtype=float)
    return np.where(y == 0.0, classifier.predict_proba(X), conformity_score(X, y, regressor))


@dataclass(frozen=True)
class WeightedVciCalibration:
    threshold: float
    alpha: float
    classifier: Classifier
    regressor: Regressor

    def predict(self, X) -> PredictionSets:
        return weighted_predict(X, self)


def weighted_calibrate(cal: Dataset, classifier: Classifier, regressor: Regressor, alpha: float) -> WeightedVciCalibration:
    if len(cal) == 0:
        raise ValueError("calibration set is empty")
    q = conformal_threshold(mixed_scores(cal.X, cal.y, classifier, regressor), alpha)
    return WeightedVciCalibration(q, alpha, classifier, regressor)


def weighted_predict(X, calibration: WeightedVciCalibration) -> PredictionSets:
    include_zero = calibration.classifier.predict_proba(X) <= calibration.threshold
    radius = max(calibration.threshold, 0.0)
    return _combine(include_zero, calibration.regressor.predict(X), radius)
