"""Classification-powered conformal inference for zero-inflated outcomes.

A classifier first decides whether a point is "predicted as zero"; those
points get the singleton ``{0}``. Everything else gets a split-conformal
interval whose level is relaxed by the coverage already earned on the
predicted zeros. The fraction ``r`` of calibration points routed to ``{0}``
is chosen from a grid to minimize the expected interval length.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import DataSplits, Dataset, PredictionSet, PredictionSets, SetKind, interval_sets
from .models import Classifier, Regressor
from .quantiles import conformal_threshold, empirical_quantile
from .vci import conformity_score

logger = logging.getLogger(__name__)

OBJECTIVES = ("overall_length", "nonzero_length")


def default_grid(step: float = 0.05) -> tuple[float, ...]:
    """``0, step, 2*step, ...`` strictly below 1."""
    count = int(math.floor(1.0 / step + 1e-9))
    grid = tuple(round(i * step, 12) for i in range(count + 1))
    return tuple(r for r in grid if r < 1.0)


@dataclass(frozen=True)
class CpciConfig:
    """Settings for one calibration run.

    ``c_const = 0`` uses the plain validation estimate of the negative
    predictive value; any value above 2 subtracts the finite-sample margin
    ``c_const / r * sqrt(log n / n)`` first.
    """

    alpha: float = 0.9
    grid: tuple[float, ...] = field(default_factory=default_grid)
    c_const: float = 0.0
    objective: str = "overall_length"
    clip_at_zero: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        grid = tuple(float(r) for r in self.grid)
        if not grid:
            raise ValueError("r grid is empty")
        if any(not 0.0 <= r < 1.0 for r in grid):
            raise ValueError("r grid values must lie in [0, 1)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("r grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if self.c_const != 0.0 and not self.c_const > 2.0:
            raise ValueError(f"c_const must be 0 (no adjustment) or > 2, got {self.c_const}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")


def classification_threshold_from_probs(probs, r: float) -> float:
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    probs = np.asarray(probs, dtype=float)
    if probs.size == 0:
        raise ValueError("first calibration fold is empty")
    return empirical_quantile(np.append(probs, 1.0), r)


def classification_threshold(cal1: Dataset, classifier: Classifier, r: float) -> float:
    """r-quantile of the fold's non-zero probabilities with 1 appended."""
    return classification_threshold_from_probs(classifier.predict_proba(cal1.X), r)


def beta_from_probs(probs, y, alpha_r: float, r: float) -> float:
    probs = np.asarray(probs, dtype=float)
    if probs.size == 0:
        raise ValueError("validation set is empty")
    if r == 0.0:
        return 0.0
    hits = np.count_nonzero((probs <= alpha_r) & (np.asarray(y) == 0.0))
    return min(1.0, hits / (probs.size * r))


def estimate_beta(val: Dataset, classifier: Classifier, alpha_r: float, r: float) -> float:
    """Share of true zeros among validation points predicted as zero.

    The count is divided by ``len(val) * r`` and clamped to ``[0, 1]``.
    """
    return beta_from_probs(classifier.predict_proba(val.X), val.y, alpha_r, r)


def adjust_beta(beta_hat: float, r: float, n_val: int, c_const: float) -> float:
    """Subtract ``c_const / r * sqrt(log n_val / n_val)``; may go negative."""
    if r <= 0.0:
        raise ValueError("adjust_beta needs r > 0")
    if n_val < 3:
        raise ValueError("adjust_beta needs at least 3 validation samples")
    if not c_const > 2.0:
        raise ValueError("c_const must exceed 2")
    return beta_hat - c_const / r * math.sqrt(math.log(n_val) / n_val)


def effective_level(alpha: float, r: float, beta: float) -> float:
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    return min(1.0, max(0.0, (alpha - r * beta) / (1.0 - r)))


def radius_from_scores(scores, probs, alpha_r: float, gamma: float) -> float:
    scores = np.asarray(scores, dtype=float)[np.asarray(probs) > alpha_r]
    if scores.size == 0:
        return math.inf
    q = conformal_threshold(scores, gamma)
    # gamma == 0 asks for no coverage at all; keep a point interval
    return max(q, 0.0)


def conformal_radius(cal2: Dataset, classifier: Classifier, regressor: Regressor, alpha_r: float, gamma: float) -> float:
    """Conformal quantile of residuals over the points not predicted as zero."""
    return radius_from_scores(
        conformity_score(cal2.X, cal2.y, regressor), classifier.predict_proba(cal2.X), alpha_r, gamma
    )


@dataclass(frozen=True)
class GridPoint:
    r: float
    alpha_r: float
    beta_hat: float
    beta_tilde: float
    gamma: float
    q_r: float
    objective: float


@dataclass(frozen=True)
class CpciCalibration:
    r_hat: float
    alpha_r: float
    beta_hat: float
    beta_tilde: float
    gamma: float
    q_r: float
    alpha: float
    classifier: Classifier
    regressor: Regressor
    clip_at_zero: bool = False
    grid: tuple[GridPoint, ...] = ()

    def predict(self, X) -> PredictionSets:
        return cpci_predict(X, self)


def cpci_predict(X, calibration: CpciCalibration) -> PredictionSets:
    """``{0}`` where the classifier says zero, else ``f(x) +/- q_r``."""
    probs = calibration.classifier.predict_proba(X)
    sets = interval_sets(calibration.regressor.predict(X), calibration.q_r, calibration.clip_at_zero)
    zero = probs <= calibration.alpha_r
    return PredictionSets(
        np.where(zero, np.int8(SetKind.ZERO), sets.kind),
        np.where(zero, np.nan, sets.lo),
        np.where(zero, np.nan, sets.hi),
    )


def cpci_predict_one(x, calibration: CpciCalibration) -> PredictionSet:
    return cpci_predict(np.atleast_2d(x), calibration)[0]


def _objective(r: float, q_r: float, objective: str) -> float:
    if math.isinf(q_r):
        return math.inf
    if objective == "overall_length":
        return 2.0 * (1.0 - r) * q_r
    return q_r


def _evaluate_grid_point(r, config, p_cal1, p_val, y_val, p_cal2, s_cal2) -> GridPoint:
    alpha_r = classification_threshold_from_probs(p_cal1, r)
    if r == 0.0:
        beta_hat = beta_tilde = 0.0
        gamma = config.alpha
    else:
        beta_hat = beta_from_probs(p_val, y_val, alpha_r, r)
        beta_tilde = beta_hat
        if config.c_const:
            beta_tilde = adjust_beta(beta_hat, r, p_val.size, config.c_const)
        gamma = effective_level(config.alpha, r, beta_tilde)
    q_r = radius_from_scores(s_cal2, p_cal2, alpha_r, gamma)
    return GridPoint(r, alpha_r, beta_hat, beta_tilde, gamma, q_r, _objective(r, q_r, config.objective))


def _score_inputs(splits: DataSplits, classifier, regressor):
    return (
        classifier.predict_proba(splits.cal1.X),
        classifier.predict_proba(splits.val.X),
        splits.val.y,
        classifier.predict_proba(splits.cal2.X),
        conformity_score(splits.cal2.X, splits.cal2.y, regressor),
    )


def _calibration(pt: GridPoint, points, config, classifier, regressor) -> CpciCalibration:
    return CpciCalibration(
        r_hat=pt.r,
        alpha_r=pt.alpha_r,
        beta_hat=pt.beta_hat,
        beta_tilde=pt.beta_tilde,
        gamma=pt.gamma,
        q_r=pt.q_r,
        alpha=config.alpha,
        classifier=classifier,
        regressor=regressor,
        clip_at_zero=config.clip_at_zero,
        grid=tuple(points),
    )


def select_r(
    splits: DataSplits,
    classifier: Classifier,
    regressor: Regressor,
    config: CpciConfig = CpciConfig(),
) -> CpciCalibration:
    """Calibrate at every grid value of ``r`` and keep the shortest.

    Ties go to the smaller ``r``. If every grid value yields an infinite
    objective the calibration falls back to ``r = 0``.
    """
    inputs = _score_inputs(splits, classifier, regressor)
    points = [_evaluate_grid_point(r, config, *inputs) for r in config.grid]
    best = points[0]
    for pt in points[1:]:
        if pt.objective < best.objective:
            best = pt
    if math.isinf(best.objective) and best.r != 0.0:
        logger.warning("every r on the grid gives an unbounded interval; falling back to r = 0")
        best = _evaluate_grid_point(0.0, config, *inputs)
    return _calibration(best, points, config, classifier, regressor)


def calibrate_fixed_r(
    splits: DataSplits, classifier: Classifier, regressor: Regressor, r: float, config: CpciConfig = CpciConfig()
) -> CpciCalibration:
    """Calibration at one pre-chosen ``r``, without selection or fallback."""
    pt = _evaluate_grid_point(r, config, *_score_inputs(splits, classifier, regressor))
    return _calibration(pt, [pt], config, classifier, regressor)
