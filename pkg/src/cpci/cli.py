"""Command-line entry point: ``cpci {simulate,airquality,fit,predict,plot}``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import core, models, reporting, simulation
from .airquality import AirQualityConfig, AirQualityFormatError, load_airquality
from .config import ConfigError, RunConfig, load_config
from .data import Dataset, SeedSpec, SetKind, partition
from .serialization import CalibrationFormatError, load_calibration, save_calibration

logger = logging.getLogger("cpci")

SIMULATE_REPS = 1000
AIRQUALITY_REPS = 100
AIRQUALITY_METHODS = ("VCI", "VCI-KNN", "CPCI", "CPCI-KNN", "CLASS-COND", "WEIGHTED-VCI")


class CommandError(RuntimeError):
    pass


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat YAML file with run settings")
    p.add_argument("--scenario", help="linear, nonlinear, or both comma-separated")
    p.add_argument("--n", help="total sample size(s), comma-separated")
    p.add_argument("--n-test", dest="n_test")
    p.add_argument("--reps")
    p.add_argument("--alpha")
    p.add_argument("--zero-frac", dest="zero_frac")
    p.add_argument("--method", help="method id(s), comma-separated")
    p.add_argument("--classifier", help="logistic, knn or random (fit command)")
    p.add_argument("--regressor", help="ols, knn or constant (fit command)")
    p.add_argument("--objective", help="overall_length or nonzero_length")
    p.add_argument("--c-const", dest="c_const", help="0 disables the finite-sample NPV margin; otherwise > 2")
    p.add_argument("--grid-step", dest="grid_step")
    p.add_argument("--tolerance-quantile", dest="tolerance_quantile")
    p.add_argument("--seed")
    p.add_argument("--out")
    p.add_argument("--workers")
    p.add_argument("--clip-at-zero", dest="clip_at_zero", action="store_const", const="true")
    p.add_argument("--record-runtime", dest="record_runtime", action="store_const", const="true",
                   help="fill runtime_ms (output is then no longer byte-reproducible)")
    p.add_argument("--plot", action="store_const", const="true", help="also write summary.svg")


def _config_from_args(args, defaults: dict | None = None) -> RunConfig:
    keys = ("scenario", "n", "n_test", "reps", "alpha", "zero_frac", "method", "classifier", "regressor",
            "objective", "c_const", "grid_step", "tolerance_quantile", "seed", "out", "workers",
            "clip_at_zero", "record_runtime", "plot")
    overrides = {k: getattr(args, k, None) for k in keys}
    return load_config(args.config, overrides, defaults).validate()


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        logger.info("%d/%d replications", done, total)


def _write_results(cfg: RunConfig, command: str, records, alpha) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = reporting.provenance_lines(command, cfg.as_dict(results_only=True))
    reporting.write_records(out / "records.csv", records, prov)
    agg = simulation.aggregate(records)
    reporting.write_aggregate(out / "aggregate.csv", agg, prov)
    if cfg.plot:
        from .plotting import save_summary_svg

        save_summary_svg(agg, out / "summary.svg", alpha)
    return out


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args, {"reps": SIMULATE_REPS})
    reps = cfg.reps
    scenarios = [cfg.scenario_spec(kind, n) for kind in cfg.scenario for n in cfg.n]
    records = simulation.run_sweep(
        scenarios, cfg.method, cfg.cpci_config(), SeedSpec(cfg.seed), reps,
        workers=cfg.workers, record_runtime=cfg.record_runtime, progress=_progress,
    )
    out = _write_results(cfg, "simulate", records, cfg.alpha)
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_airquality(args) -> int:
    cfg = _config_from_args(args, {"method": AIRQUALITY_METHODS, "reps": AIRQUALITY_REPS})
    reps = cfg.reps
    path = Path(args.data)
    if not path.is_file():
        raise CommandError(f"dataset file not found: {path}")
    datasets = []
    for q in cfg.tolerance_quantile:
        data = load_airquality(path, AirQualityConfig(q, hour_encoding=cfg.hour_encoding))
        datasets.append((f"airquality-q{q:g}", data.dataset))
    records = simulation.run_dataset_sweep(
        datasets, cfg.method, cfg.cpci_config(), SeedSpec(cfg.seed), reps,
        workers=cfg.workers, record_runtime=cfg.record_runtime, progress=_progress,
    )
    out = _write_results(cfg, "airquality", records, cfg.alpha)
    print(f"wrote {len(records)} records to {out}")
    return 0


def read_table(path, require_y: bool):
    """Numeric CSV with a header; returns (ids, feature names, X, y or None)."""
    rows = reporting.read_csv(path)
    if not rows:
        raise reporting.SchemaError(f"{path}: no data rows")
    names = list(rows[0].keys())
    if require_y and "y" not in names:
        raise reporting.SchemaError(f"{path}: a 'y' column is required")
    feats = [c for c in names if c not in ("id", "y")]
    if not feats:
        raise reporting.SchemaError(f"{path}: no feature columns")
    try:
        X = np.array([[float(r[c]) for c in feats] for r in rows], dtype=float)
        y = np.array([float(r["y"]) for r in rows], dtype=float) if "y" in names else None
    except (TypeError, ValueError) as exc:
        raise reporting.SchemaError(f"{path}: non-numeric value ({exc})") from exc
    ids = [r["id"] for r in rows] if "id" in names else [str(i) for i in range(len(rows))]
    return ids, feats, X, y


def fit_calibration(train: Dataset, cfg: RunConfig) -> core.CpciCalibration:
    splits = partition(train, (0.25, 0.25, 0.25, 0.25), SeedSpec(cfg.seed).rng(0, "fit-partition"))
    classifier = models.CLASSIFIERS[cfg.classifier](splits.train, seed=cfg.seed % 2**31)
    regressor = models.REGRESSORS[cfg.regressor](splits.train, True)
    return core.select_r(splits, classifier, regressor, cfg.cpci_config())


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    _, feats, X, y = read_table(args.train, require_y=True)
    cal = fit_calibration(Dataset(X, y), cfg)
    out = Path(args.out) if args.out else Path("calibration.json")
    save_calibration(cal, out, feats)
    print(f"r_hat={cal.r_hat:g} alpha_r={cal.alpha_r:.6g} gamma={cal.gamma:.6g} q_r={cal.q_r:.6g} -> {out}")
    return 0


SET_KIND_NAMES = {SetKind.ZERO: "zero", SetKind.INTERVAL: "interval", SetKind.UNBOUNDED: "unbounded"}


def prediction_rows(ids, sets):
    for i, s in zip(ids, sets):
        if s.kind is SetKind.INTERVAL:
            yield [i, "interval", repr(s.lo), repr(s.hi)]
        else:
            yield [i, SET_KIND_NAMES[s.kind], "", ""]


def cmd_predict(args) -> int:
    cal, names = load_calibration(args.calibration)
    ids, feats, X, _ = read_table(args.features, require_y=False)
    if names is not None and feats != list(names):
        raise reporting.SchemaError(f"feature columns {feats} do not match calibration features {names}")
    sets = core.cpci_predict(X, cal)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "set_kind", "lo", "hi"])
    writer.writerows(prediction_rows(ids, sets))
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_plot(args) -> int:
    from .plotting import save_summary_svg

    rows = reporting.read_aggregate(args.results)
    alphas = {r["alpha"] for r in rows}
    save_summary_svg(rows, args.out, alphas.pop() if len(alphas) == 1 else None)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpci", description="Conformal prediction sets for zero-inflated outcomes")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthetic replication sweep")
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("airquality", help="repeated splits of the UCI Air Quality data")
    p.add_argument("data", help="AirQualityUCI.csv")
    _add_run_flags(p)
    p.set_defaults(func=cmd_airquality)

    p = sub.add_parser("fit", help="calibrate on a CSV with feature columns and y")
    p.add_argument("train")
    _add_run_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="prediction sets for a feature CSV")
    p.add_argument("calibration")
    p.add_argument("features")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plot", help="four-panel SVG from an aggregate CSV")
    p.add_argument("results")
    p.add_argument("--out", default="summary.svg")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, reporting.SchemaError, CalibrationFormatError, AirQualityFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CommandError, OSError, simulation.ReplicationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
