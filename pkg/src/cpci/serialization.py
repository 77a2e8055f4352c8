"""Versioned JSON documents for fitted CPCI calibrations."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .core import CpciCalibration
from .models import model_from_dict

FORMAT = "cpci-calibration"
VERSION = 1


class CalibrationFormatError(ValueError):
    pass


def encode_real(x: float):
    """JSON has no infinities; they travel as the strings ``"inf"``/``"-inf"``."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def decode_real(v) -> float:
    if isinstance(v, str):
        if v not in ("inf", "-inf"):
            raise CalibrationFormatError(f"bad extended real {v!r}")
        return math.inf if v == "inf" else -math.inf
    return float(v)


def calibration_to_dict(cal: CpciCalibration, feature_names=None) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "alpha": cal.alpha,
        "r_hat": cal.r_hat,
        "alpha_r": encode_real(cal.alpha_r),
        "beta_hat": cal.beta_hat,
        "beta_tilde": cal.beta_tilde,
        "gamma": cal.gamma,
        "q_r": encode_real(cal.q_r),
        "clip_at_zero": cal.clip_at_zero,
        "feature_names": list(feature_names) if feature_names is not None else None,
        "classifier": cal.classifier.to_dict(),
        "regressor": cal.regressor.to_dict(),
    }


def calibration_from_dict(doc: dict) -> tuple[CpciCalibration, list | None]:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CalibrationFormatError("not a CPCI calibration document")
    if doc.get("version") != VERSION:
        raise CalibrationFormatError(f"unsupported calibration version {doc.get('version')!r} (expected {VERSION})")
    try:
        cal = CpciCalibration(
            r_hat=float(doc["r_hat"]),
            alpha_r=decode_real(doc["alpha_r"]),
            beta_hat=float(doc["beta_hat"]),
            beta_tilde=float(doc["beta_tilde"]),
            gamma=float(doc["gamma"]),
            q_r=decode_real(doc["q_r"]),
            alpha=float(doc["alpha"]),
            classifier=model_from_dict(doc["classifier"]),
            regressor=model_from_dict(doc["regressor"]),
            clip_at_zero=bool(doc["clip_at_zero"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CalibrationFormatError(f"malformed calibration document: {exc}") from exc
    return cal, doc.get("feature_names")


def save_calibration(cal: CpciCalibration, path, feature_names=None) -> None:
    Path(path).write_text(json.dumps(calibration_to_dict(cal, feature_names), indent=1, allow_nan=False) + "\n")


def load_calibration(path) -> tuple[CpciCalibration, list | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CalibrationFormatError(f"{path}: not valid JSON ({exc})") from exc
    return calibration_from_dict(doc)
