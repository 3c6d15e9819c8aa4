"""Tabular sweep results and their CSV / JSON serialization.

CSV layout: a block of ``# key=value`` comment lines holding the resolved
configuration and tool version, then one header line with the column names,
then data rows. Floats are written with 17 significant digits so reruns with
the same configuration are byte-identical. JSON mirrors the same content as
``{"metadata": {...}, "columns": [...], "rows": [[...], ...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

from . import __version__

JSON_SCHEMA = {
    "type": "object",
    "required": ["metadata", "columns", "rows"],
    "properties": {
        "metadata": {"type": "object", "required": ["tool", "version"]},
        "columns": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "rows": {
            "type": "array",
            "items": {"type": "array", "items": {"type": ["number", "string", "null"]}},
        },
    },
}


@dataclass
class SweepResult:
    """Rows of (control parameters -> observables) with provenance."""

    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, **values):
        missing = [c for c in self.columns if c not in values]
        if missing:
            raise KeyError(f"row is missing columns {missing}")
        self.rows.append([values[c] for c in self.columns])

    def column(self, name):
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def __len__(self):
        return len(self.rows)


def format_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    if hasattr(v, "item") and not isinstance(v, str):
        v = v.item()
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return _json_value(v.item())
    return v


def full_metadata(result: SweepResult) -> dict:
    meta = {"tool": "gated-eoc", "version": __version__}
    meta.update(result.metadata)
    return meta


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    for key, value in full_metadata(result).items():
        buf.write(f"# {key}={format_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    doc = {
        "metadata": {k: _json_value(v) for k, v in full_metadata(result).items()},
        "columns": list(result.columns),
        "rows": [[_json_value(v) for v in row] for row in result.rows],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def write_results(result: SweepResult, fmt: str = "csv", path=None) -> str:
    """Serialize ``result``; write it to ``path`` (``None`` or ``-`` = return only)."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path not in (None, "-"):
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path_or_text: str) -> SweepResult:
    """Parse a file written by :func:`to_csv` (numbers become floats)."""
    if "\n" in path_or_text:
        lines = path_or_text.splitlines()
    else:
        with open(path_or_text, encoding="utf8") as fh:
            lines = fh.read().splitlines()
    meta, body = {}, []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for v in raw:
            try:
                row.append(float(v))
            except ValueError:
                row.append(v)
        rows.append(row)
    return SweepResult(columns=columns, rows=rows, metadata=meta)
