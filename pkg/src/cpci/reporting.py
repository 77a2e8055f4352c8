"""CSV output with an embedded provenance block, and CSV readers."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .simulation import AGGREGATE_COLUMNS, RECORD_COLUMNS, ExperimentRecord


class SchemaError(ValueError):
    pass


def format_value(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def provenance_lines(command: str, config: dict) -> list[str]:
    return [
        f"# cpci {__version__}",
        f"# command: {command}",
        f"# master_seed: {config.get('seed')}",
        "# config: " + json.dumps(config, sort_keys=True, default=str),
    ]


def write_csv(path, columns: Sequence[str], rows: Iterable[dict], provenance: Sequence[str] = ()) -> None:
    buf = io.StringIO()
    for line in provenance:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue())


def write_records(path, records: Sequence[ExperimentRecord], provenance: Sequence[str] = ()) -> None:
    write_csv(path, RECORD_COLUMNS, (r.as_row() for r in records), provenance)


def write_aggregate(path, rows: Sequence[dict], provenance: Sequence[str] = ()) -> None:
    write_csv(path, AGGREGATE_COLUMNS, rows, provenance)


def read_csv(path, required: Sequence[str] = ()) -> list[dict]:
    """Rows as dicts of strings; ``#`` lines before the header are skipped."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    return list(reader)


def parse_float(text: str) -> float:
    return math.nan if text == "" else float(text)


def read_aggregate(path) -> list[dict]:
    rows = read_csv(path, AGGREGATE_COLUMNS)
    out = []
    for row in rows:
        parsed = {"method": row["method"], "scenario": row["scenario"], "n": int(row["n"])}
        for c in AGGREGATE_COLUMNS[3:]:
            parsed[c] = parse_float(row[c])
        out.append(parsed)
    return out
