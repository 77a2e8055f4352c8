"""Split conformal prediction with absolute-residual scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, PredictionSet, PredictionSets, interval_sets
from .models import Regressor
from .quantiles import conformal_threshold


def conformity_score(X, y, regressor: Regressor) -> np.ndarray:
    """``|y - f(x)|`` for each row."""
    return np.abs(np.asarray(y, dtype=float) - regressor.predict(X))


@dataclass(frozen=True)
class VciCalibration:
    regressor: Regressor
    threshold: float
    alpha: float
    clip_at_zero: bool = False

    def predict(self, X) -> PredictionSets:
        return vci_predict(X, self)


def vci_calibrate(cal: Dataset, regressor: Regressor, alpha: float, clip_at_zero: bool = False) -> VciCalibration:
    if len(cal) == 0:
        raise ValueError("calibration set is empty")
    scores = conformity_score(cal.X, cal.y, regressor)
    return VciCalibration(regressor, conformal_threshold(scores, alpha), alpha, clip_at_zero)


def vci_predict(X, calibration: VciCalibration) -> PredictionSets:
    """``[f(x) - Q, f(x) + Q]`` for every row of ``X``."""
    radius = max(calibration.threshold, 0.0) if not math.isinf(calibration.threshold) else math.inf
    return interval_sets(calibration.regressor.predict(X), radius, calibration.clip_at_zero)


def vci_predict_one(x, calibration: VciCalibration) -> PredictionSet:
    return vci_predict(np.atleast_2d(x), calibration)[0]
