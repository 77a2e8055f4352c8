"""Run configuration: a flat YAML mapping whose keys mirror the CLI flags.

Example file::

    scenario: linear          # linear, nonlinear, or a list of both
    n: [1000, 2000]
    reps: 200
    alpha: 0.9
    method: [VCI, CPCI]
    seed: 7

Unknown keys are rejected; missing keys take the defaults below.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

from .core import OBJECTIVES, CpciConfig, default_grid
from .simulation import METHODS, ScenarioSpec

DEFAULT_METHODS = ("VCI", "VCI-KNN", "CPCI", "CPCI-KNN", "CLASS-COND", "WEIGHTED-VCI")


# excluded from provenance so reruns into another directory or pool size stay byte-identical
OUTPUT_ONLY_KEYS = ("out", "workers", "plot")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: tuple[str, ...] = ("linear",)
    n: tuple[int, ...] = (1000, 2000, 3000, 4000, 5000)
    n_test: int = 1000
    d: int = 4
    noise_sd: float = 1.0
    zero_frac: float = 0.75
    reps: int | None = None
    alpha: float = 0.9
    method: tuple[str, ...] = DEFAULT_METHODS
    classifier: str = "logistic"
    regressor: str = "ols"
    objective: str = "overall_length"
    c_const: float = 0.0
    grid_step: float = 0.05
    clip_at_zero: bool = False
    tolerance_quantile: tuple[float, ...] = (0.4, 0.5, 0.6, 0.7, 0.8)
    hour_encoding: bool = True
    seed: int = 0
    out: str = "results"
    workers: int = 1
    record_runtime: bool = False
    plot: bool = False

    def validate(self) -> "RunConfig":
        if self.reps is not None and self.reps < 1:
            raise ConfigError("reps must be at least 1")
        bad = [m for m in self.method if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {sorted(METHODS)}")
        if self.classifier not in ("logistic", "knn", "random"):
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        if self.regressor not in ("ols", "knn", "constant"):
            raise ConfigError(f"unknown regressor {self.regressor!r}")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if not 0.0 < self.grid_step < 1.0:
            raise ConfigError("grid_step must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            self.cpci_config()
            for sc in self.scenario:
                for n in self.n:
                    self.scenario_spec(sc, n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for q in self.tolerance_quantile:
            if not 0.0 < q < 1.0:
                raise ConfigError("tolerance_quantile values must lie in (0, 1)")
        return self

    def cpci_config(self) -> CpciConfig:
        return CpciConfig(
            alpha=self.alpha,
            grid=default_grid(self.grid_step),
            c_const=self.c_const,
            objective=self.objective,
            clip_at_zero=self.clip_at_zero,
        )

    def scenario_spec(self, kind: str, n: int) -> ScenarioSpec:
        return ScenarioSpec(kind, n, self.n_test, self.d, self.zero_frac, self.noise_sd)

    def as_dict(self, results_only: bool = False) -> dict:
        """Plain dict; ``results_only`` drops keys that cannot change any number."""
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}
        if results_only:
            for k in OUTPUT_ONLY_KEYS:
                d.pop(k)
        return d


_TUPLE_TYPES = {"scenario": str, "n": int, "method": str, "tolerance_quantile": float}
_SCALAR_TYPES = {
    "n_test": int, "d": int, "noise_sd": float, "zero_frac": float, "reps": int, "alpha": float,
    "classifier": str, "regressor": str, "objective": str, "c_const": float, "grid_step": float,
    "clip_at_zero": bool, "hour_encoding": bool, "seed": int, "out": str, "workers": int,
    "record_runtime": bool, "plot": bool,
}


def coerce(key: str, value):
    """Convert a file value or a flag string to the field's type."""
    if key in _TUPLE_TYPES:
        typ = _TUPLE_TYPES[key]
        if isinstance(value, str):
            value = [v for v in (p.strip() for p in value.split(",")) if v]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        try:
            return tuple(typ(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    typ = _SCALAR_TYPES[key]
    if typ is bool and isinstance(value, str):
        lowered = value.lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"bad boolean for {key}: {value!r}")
        return lowered in ("true", "1", "yes")
    try:
        return typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def load_config(path=None, overrides: dict | None = None, defaults: dict | None = None) -> RunConfig:
    """File values override ``defaults``; non-``None`` ``overrides`` (flags) override both."""
    values = dict(defaults or {})
    if path is not None:
        try:
            doc = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a flat key/value mapping")
        unknown = sorted(set(doc) - set(FIELD_NAMES))
        if unknown:
            raise ConfigError(f"{path}: unknown keys {unknown}")
        for k, v in doc.items():
            if isinstance(v, dict):
                raise ConfigError(f"{path}: key {k!r} must not be nested")
            values[k] = coerce(k, v)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = coerce(k, v)
    return replace(RunConfig(), **values)
