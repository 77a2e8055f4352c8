"""Synthetic zero-inflated data, method configurations and the replication runner."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import baselines, core, models, vci
from .data import Dataset, DataSplits, PredictionSets, SeedSpec, merge_for_two_way, partition, partition_sizes
from .quantiles import empirical_quantile

logger = logging.getLogger(__name__)

# Latent-outcome coefficients. Chosen for this package: the generating
# formulas behind the published simulations are not available.
LINEAR_INTERCEPT = 1.0
LINEAR_COEF = (2.0, -1.0, 1.5, 0.5)
NONLINEAR_COEF = {"sin": 2.0, "square": 1.0, "linear3": -1.0, "linear4": 0.5}


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "linear"
    n: int = 2000
    n_test: int = 1000
    d: int = 4
    zero_fraction: float = 0.75
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "nonlinear"):
            raise ValueError(f"scenario kind must be 'linear' or 'nonlinear', got {self.kind!r}")
        if not 0.0 < self.zero_fraction < 1.0:
            raise ValueError("zero_fraction must lie strictly inside (0, 1)")
        if self.d < 1 or self.n < 40 * self.d:
            raise ValueError(f"need d >= 1 and n >= 40 * d (n={self.n}, d={self.d})")
        if self.n_test < 1:
            raise ValueError("n_test must be positive")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")


def latent_outcome(X: np.ndarray, kind: str) -> np.ndarray:
    """Noise-free latent response; features beyond the fourth carry no signal."""
    cols = [X[:, j] if j < X.shape[1] else np.zeros(X.shape[0]) for j in range(4)]
    if kind == "linear":
        return LINEAR_INTERCEPT + sum(c * x for c, x in zip(LINEAR_COEF, cols))
    return (
        NONLINEAR_COEF["sin"] * np.sin(np.pi * cols[0])
        + NONLINEAR_COEF["square"] * cols[1] ** 2
        + NONLINEAR_COEF["linear3"] * cols[2]
        + NONLINEAR_COEF["linear4"] * cols[3]
    )


def threshold_outcome(latent: np.ndarray, zero_fraction: float) -> np.ndarray:
    """Zero out everything at or below the pooled ``zero_fraction`` quantile."""
    t = empirical_quantile(latent, zero_fraction)
    y = np.zeros_like(latent)
    above = latent > t
    y[above] = latent[above] - t
    return y


def generate(scenario: ScenarioSpec, rng: np.random.Generator) -> Dataset:
    """Draw ``n + n_test`` pooled samples; outcomes are thresholded jointly."""
    total = scenario.n + scenario.n_test
    X = rng.standard_normal((total, scenario.d))
    W = latent_outcome(X, scenario.kind) + scenario.noise_sd * rng.standard_normal(total)
    return Dataset(X, threshold_outcome(W, scenario.zero_fraction))


def scenario_splits(scenario: ScenarioSpec, seed: SeedSpec, rep: int) -> DataSplits:
    """Four equal splits of the ``n`` modelling samples plus the test block."""
    data = generate(scenario, seed.rng(rep, "data"))
    quarter = [scenario.n // 4 + (1 if i < scenario.n % 4 else 0) for i in range(4)]
    return partition_sizes(data, quarter + [scenario.n_test], seed.rng(rep, "partition"))


@dataclass(frozen=True)
class Metrics:
    coverage: float
    avg_length: float
    prop_zero_in_set: float
    avg_nonzero_length: float
    disconnected: int


def compute_metrics(predictions, truths) -> Metrics:
    """Coverage and size summaries of a batch of prediction sets.

    ``avg_nonzero_length`` averages over the sets that are not ``{0}`` and is
    NaN when every set is ``{0}``.
    """
    if not isinstance(predictions, PredictionSets):
        predictions = PredictionSets.from_sets(list(predictions))
    truths = np.asarray(truths, dtype=float)
    if len(predictions) != truths.shape[0]:
        raise ValueError(f"{len(predictions)} prediction sets but {truths.shape[0]} outcomes")
    if len(predictions) == 0:
        raise ValueError("no predictions to score")
    lengths = predictions.lengths
    not_zero = predictions.kind != 0
    return Metrics(
        coverage=float(np.mean(predictions.contains(truths))),
        avg_length=float(np.mean(lengths)),
        prop_zero_in_set=float(np.mean(predictions.contains_zero)),
        avg_nonzero_length=float(np.mean(lengths[not_zero])) if not_zero.any() else math.nan,
        disconnected=int(np.count_nonzero(predictions.is_disconnected)),
    )


@dataclass(frozen=True)
class MethodSpec:
    classifier: str | None
    regressor: str
    procedure: str  # "vci", "cpci", "classcond" or "weighted"
    nonzero_regression: bool


METHODS = {
    "VCI": MethodSpec(None, "ols", "vci", False),
    "VCI-KNN": MethodSpec(None, "knn", "vci", False),
    "VCI-adversarial": MethodSpec(None, "constant", "vci", False),
    "CPCI": MethodSpec("logistic", "ols", "cpci", True),
    "CPCI-KNN": MethodSpec("knn", "knn", "cpci", True),
    "CPCI-adversarial": MethodSpec("random", "constant", "cpci", True),
    "CLASS-COND": MethodSpec("logistic", "ols", "classcond", True),
    "WEIGHTED-VCI": MethodSpec("logistic", "ols", "weighted", True),
}


@dataclass(frozen=True)
class FittedMethod:
    """What one method produced on one set of splits."""

    predictions: PredictionSets
    calibration: object
    r_hat: float = math.nan


def fit_method(method: str, splits: DataSplits, cpci_config: core.CpciConfig, classifier_seed: int = 0) -> FittedMethod:
    """Fit models on ``splits.train``, calibrate, and predict ``splits.test``."""
    try:
        spec = METHODS[method]
    except KeyError as exc:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from exc
    train = splits.train
    regressor = models.REGRESSORS[spec.regressor](train, spec.nonzero_regression)
    classifier = None
    if spec.classifier is not None:
        classifier = models.CLASSIFIERS[spec.classifier](train, seed=classifier_seed)
    X_test = splits.test.X

    if spec.procedure == "cpci":
        cal = core.select_r(splits, classifier, regressor, cpci_config)
        return FittedMethod(core.cpci_predict(X_test, cal), cal, cal.r_hat)

    _, merged = merge_for_two_way(splits)
    alpha = cpci_config.alpha
    if spec.procedure == "vci":
        cal = vci.vci_calibrate(merged, regressor, alpha, cpci_config.clip_at_zero)
        return FittedMethod(vci.vci_predict(X_test, cal), cal)
    if spec.procedure == "classcond":
        cal = baselines.classcond_calibrate(merged, classifier, regressor, alpha)
        return FittedMethod(baselines.classcond_predict(X_test, cal), cal)
    cal = baselines.weighted_calibrate(merged, classifier, regressor, alpha)
    return FittedMethod(baselines.weighted_predict(X_test, cal), cal)


RECORD_COLUMNS = (
    "method", "scenario", "n", "rep", "alpha", "r_hat", "coverage", "avg_len",
    "prop_zero_in_set", "avg_nonzero_len", "disconnected", "runtime_ms",
)


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    scenario: str
    n: int
    rep: int
    alpha: float
    r_hat: float
    coverage: float
    avg_len: float
    prop_zero_in_set: float
    avg_nonzero_len: float
    disconnected: int
    runtime_ms: float = math.nan

    def as_row(self) -> dict:
        return asdict(self)


class ReplicationError(RuntimeError):
    pass


def run_replication(
    scenario: ScenarioSpec,
    method: str,
    cpci_config: core.CpciConfig,
    seed: SeedSpec,
    rep: int,
    record_runtime: bool = False,
) -> ExperimentRecord:
    """One draw of data, one method, one row of metrics.

    All methods with the same ``(seed, rep)`` see the same data and splits.
    """
    start = time.perf_counter()
    try:
        splits = scenario_splits(scenario, seed, rep)
        fitted = fit_method(method, splits, cpci_config, classifier_seed=int(seed.rng(rep, "classifier").integers(2**31)))
    except Exception as exc:
        raise ReplicationError(f"{method} failed on {scenario.kind} n={scenario.n} rep={rep}: {exc}") from exc
    m = compute_metrics(fitted.predictions, splits.test.y)
    elapsed = (time.perf_counter() - start) * 1000.0 if record_runtime else math.nan
    return ExperimentRecord(
        method, scenario.kind, scenario.n, rep, cpci_config.alpha, fitted.r_hat,
        m.coverage, m.avg_length, m.prop_zero_in_set, m.avg_nonzero_length, m.disconnected, elapsed,
    )


def run_dataset_replication(
    data: Dataset,
    label: str,
    method: str,
    cpci_config: core.CpciConfig,
    seed: SeedSpec,
    rep: int,
    record_runtime: bool = False,
) -> ExperimentRecord:
    """Five equal random splits of a fixed dataset, then one method."""
    start = time.perf_counter()
    try:
        splits = partition(data, (0.2,) * 5, seed.rng(rep, "partition"))
        fitted = fit_method(method, splits, cpci_config, classifier_seed=int(seed.rng(rep, "classifier").integers(2**31)))
    except Exception as exc:
        raise ReplicationError(f"{method} failed on {label} rep={rep}: {exc}") from exc
    m = compute_metrics(fitted.predictions, splits.test.y)
    elapsed = (time.perf_counter() - start) * 1000.0 if record_runtime else math.nan
    return ExperimentRecord(
        method, label, len(data), rep, cpci_config.alpha, fitted.r_hat,
        m.coverage, m.avg_length, m.prop_zero_in_set, m.avg_nonzero_length, m.disconnected, elapsed,
    )


def _run_job(job):
    return run_replication(*job)


def _run_dataset_job(job):
    return run_dataset_replication(*job)


def _execute(fn, jobs, workers, progress):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves submission order, so output order never depends on scheduling
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    records = []
    for i, job in enumerate(jobs):
        records.append(fn(job))
        if progress is not None:
            progress(i + 1, len(jobs))
    return records


def run_sweep(
    scenarios: Sequence[ScenarioSpec],
    methods: Sequence[str],
    cpci_config: core.CpciConfig,
    seed: SeedSpec,
    reps: int,
    workers: int = 1,
    record_runtime: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> list[ExperimentRecord]:
    """Every (scenario, rep, method) combination, returned in a fixed order."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    jobs = [
        (sc, method, cpci_config, seed, rep, record_runtime)
        for sc in scenarios
        for rep in range(reps)
        for method in methods
    ]
    return _execute(_run_job, jobs, workers, progress)


def run_dataset_sweep(
    datasets: Sequence[tuple[str, Dataset]],
    methods: Sequence[str],
    cpci_config: core.CpciConfig,
    seed: SeedSpec,
    reps: int,
    workers: int = 1,
    record_runtime: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> list[ExperimentRecord]:
    """Repeated five-way random splits of each labelled dataset."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    jobs = [
        (data, label, method, cpci_config, seed, rep, record_runtime)
        for label, data in datasets
        for rep in range(reps)
        for method in methods
    ]
    return _execute(_run_dataset_job, jobs, workers, progress)


AGGREGATE_METRICS = ("coverage", "avg_len", "prop_zero_in_set", "avg_nonzero_len", "disconnected", "r_hat")


def aggregate(records: Sequence[ExperimentRecord]) -> list[dict]:
    """Mean and standard deviation of every metric per (method, scenario, n)."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.method, rec.scenario, rec.n, rec.alpha), []).append(rec)
    rows = []
    for (method, scenario, n, alpha), recs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])):
        recs = sorted(recs, key=lambda r: r.rep)
        row = {"method": method, "scenario": scenario, "n": n, "alpha": alpha, "reps": len(recs)}
        for name in AGGREGATE_METRICS:
            vals = np.array([getattr(r, name) for r in recs], dtype=float)
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                mean = sd = math.nan
            else:
                mean = float(np.mean(vals))
                sd = float(np.std(vals, ddof=1)) if vals.size > 1 and np.isfinite(vals).all() else (0.0 if vals.size == 1 else math.nan)
            row[f"{name}_mean"] = mean
            row[f"{name}_sd"] = sd
        rows.append(row)
    return rows


AGGREGATE_COLUMNS = ("method", "scenario", "n", "alpha", "reps") + tuple(
    f"{name}_{stat}" for name in AGGREGATE_METRICS for stat in ("mean", "sd")
)
