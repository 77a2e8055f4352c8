"""UCI Air Quality CSV parsing and the CO exceedance outcome.

The distributed ``AirQualityUCI.csv`` is semicolon-delimited, uses a decimal
comma, ends every row with two empty fields, and marks missing readings with
``-200``. Trailing lines made only of separators are padding and skipped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .quantiles import empirical_quantile

MISSING = -200.0
OUTCOME_COLUMN = "CO(GT)"
SENSOR_COLUMNS = (
    "PT08.S1(CO)",
    "PT08.S2(NMHC)",
    "PT08.S3(NOx)",
    "PT08.S4(NO2)",
    "PT08.S5(O3)",
    "T",
    "RH",
    "AH",
)
EXPECTED_COLUMNS = (
    "Date", "Time", "CO(GT)", "PT08.S1(CO)", "NMHC(GT)", "C6H6(GT)", "PT08.S2(NMHC)",
    "NOx(GT)", "PT08.S3(NOx)", "NO2(GT)", "PT08.S4(NO2)", "PT08.S5(O3)", "T", "RH", "AH",
)


class AirQualityFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AirQualityTable:
    """Parsed rows: dates and times as text, every measurement as float (NaN = missing)."""

    dates: tuple[str, ...]
    times: tuple[str, ...]
    columns: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.dates)


def parse_number(field: str) -> float:
    """``"2,6"`` -> 2.6; ``"-200"`` (missing) or an empty field -> NaN."""
    text = field.strip()
    if not text:
        return math.nan
    value = float(text.replace(",", "."))
    return math.nan if value == MISSING else value


def parse_airquality(path) -> AirQualityTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = next(reader)
        except StopIteration:
            raise AirQualityFormatError(f"{path}: file is empty") from None
        if len(header) == 1 and header[0].count(",") >= 5:
            raise AirQualityFormatError(f"{path}: header is comma-delimited; expected ';' separators")
        names = [h.strip() for h in header]
        while names and not names[-1]:
            names.pop()
        missing = [c for c in EXPECTED_COLUMNS if c not in names]
        if missing:
            raise AirQualityFormatError(f"{path}: header lacks columns {missing}")
        pos = {name: i for i, name in enumerate(names)}

        dates, times = [], []
        values = {c: [] for c in EXPECTED_COLUMNS[2:]}
        for lineno, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) < len(names):
                raise AirQualityFormatError(f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}")
            try:
                parsed = {c: parse_number(row[pos[c]]) for c in values}
            except ValueError as exc:
                raise AirQualityFormatError(f"{path}:{lineno}: {exc}") from None
            dates.append(row[pos["Date"]].strip())
            times.append(row[pos["Time"]].strip())
            for c, v in parsed.items():
                values[c].append(v)
    if not dates:
        raise AirQualityFormatError(f"{path}: no data rows")
    return AirQualityTable(tuple(dates), tuple(times), {c: np.array(v, dtype=float) for c, v in values.items()})


def hour_of_day(times) -> np.ndarray:
    """``"18.00.00"`` -> 18."""
    return np.array([int(t.split(".")[0].split(":")[0]) for t in times], dtype=float)


@dataclass(frozen=True)
class AirQualityConfig:
    tolerance_quantile: float = 0.7
    features: tuple[str, ...] = SENSOR_COLUMNS
    hour_encoding: bool = True

    def __post_init__(self):
        if not 0.0 < self.tolerance_quantile < 1.0:
            raise ValueError("tolerance_quantile must lie in (0, 1)")
        unknown = [f for f in self.features if f not in EXPECTED_COLUMNS[2:] or f == OUTCOME_COLUMN]
        if unknown:
            raise ValueError(f"unknown feature columns {unknown}")


@dataclass(frozen=True)
class AirQualityData:
    dataset: Dataset
    tolerance: float
    feature_names: tuple[str, ...]
    kept_rows: np.ndarray


def clean_rows(table: AirQualityTable, features=SENSOR_COLUMNS) -> np.ndarray:
    """Indices of rows with CO(GT) and every selected feature present."""
    ok = ~np.isnan(table.columns[OUTCOME_COLUMN])
    for f in features:
        ok &= ~np.isnan(table.columns[f])
    return np.flatnonzero(ok)


def build_outcome(table: AirQualityTable, config: AirQualityConfig = AirQualityConfig()) -> AirQualityData:
    """Exceedance over the tolerance: ``CO - tau`` above ``tau``, exactly 0 at or below."""
    rows = clean_rows(table, config.features)
    if rows.size == 0:
        raise AirQualityFormatError("every row was dropped during cleaning")
    co = table.columns[OUTCOME_COLUMN][rows]
    tau = empirical_quantile(co, config.tolerance_quantile)
    y = np.zeros_like(co)
    above = co > tau
    y[above] = co[above] - tau
    cols = [table.columns[f][rows] for f in config.features]
    names = list(config.features)
    if config.hour_encoding:
        angle = 2.0 * np.pi * hour_of_day([table.times[i] for i in rows]) / 24.0
        cols += [np.sin(angle), np.cos(angle)]
        names += ["hour_sin", "hour_cos"]
    return AirQualityData(Dataset(np.column_stack(cols), y), tau, tuple(names), rows)


def load_airquality(path, config: AirQualityConfig = AirQualityConfig()) -> AirQualityData:
    return build_outcome(parse_airquality(path), config)


def export_clean_csv(data: AirQualityData, path) -> None:
    """Comma-delimited, period decimals, header row; outcome in the last column."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + ["y"])
        for x, y in zip(data.dataset.X, data.dataset.y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
