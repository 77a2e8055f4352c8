"""Conformal prediction sets for zero-inflated outcomes.

The main entry points are :func:`select_r` / :func:`cpci_predict` for the
classification-powered method and :func:`vci_calibrate` / :func:`vci_predict`
for the plain split-conformal interval.
"""

__version__ = "0.1.0"

from .core import CpciCalibration, CpciConfig, calibrate_fixed_r, cpci_predict, cpci_predict_one, select_r  # noqa: E402
from .data import Dataset, DataSplits, PredictionSet, PredictionSets, SeedSpec, SetKind, partition  # noqa: E402
from .quantiles import conformal_threshold, empirical_quantile  # noqa: E402
from .vci import vci_calibrate, vci_predict  # noqa: E402

__all__ = [
    "__version__",
    "CpciCalibration",
    "CpciConfig",
    "DataSplits",
    "Dataset",
    "PredictionSet",
    "PredictionSets",
    "SeedSpec",
    "SetKind",
    "calibrate_fixed_r",
    "conformal_threshold",
    "cpci_predict",
    "cpci_predict_one",
    "empirical_quantile",
    "partition",
    "select_r",
    "vci_calibrate",
    "vci_predict",
]
