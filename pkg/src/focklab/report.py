"""JSON and CSV reports.

A JSON report is one object with ``schema_version``, the ``command``, a
``config`` echo (the canonical configuration text), the per-instance
``records``, a ``band`` summary and the list of ``failures``.  Floats use
Python's shortest round-trip representation; non-finite values appear as
``Infinity`` / ``NaN``.  CSV reports carry one row per instance with the
columns in :data:`CSV_COLUMNS`
(:data:`WEIGHT_CLASS_COLUMNS` for the ``weight-class`` command).
"""

import csv
from dataclasses import dataclass, field
import io
import json
import math

import numpy as np

__all__ = ["CSV_COLUMNS", "WEIGHT_CLASS_COLUMNS", "Report", "emit_report", "report_from_json"]

SCHEMA_VERSION = 1
CSV_COLUMNS = ("instance_id", "p", "q", "t", "alpha", "beta", "weight_kind", "measure_kind",
               "criterion", "lower", "upper", "ratio_low", "ratio_high", "verdict")
WEIGHT_CLASS_COLUMNS = ("instance_id", "weight_kind", "p", "r", "ap_constant", "a1_constant",
                        "doubling_constant", "lattice_growth_constant", "in_a_infinity", "verdict")


def _plain(x):
    """Recursively convert numpy scalars and arrays to built-in types."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


@dataclass
class Report:
    command: str
    config: str
    records: list
    band: dict = None
    failures: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.records = _plain(self.records)
        self.band = _plain(self.band)
        self.failures = _plain(self.failures)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "records": self.records,
            "band": self.band,
            "failures": self.failures,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        columns = WEIGHT_CLASS_COLUMNS if self.command == "weight-class" else CSV_COLUMNS
        writer.writerow(columns)
        for rec in self.records:
            writer.writerow([_csv_cell(rec.get(c)) for c in columns])
        return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def report_from_json(text):
    d = json.loads(text)
    return Report(d["command"], d["config"], d["records"], d.get("band"), d.get("failures", []),
                  d.get("schema_version", SCHEMA_VERSION))


def emit_report(report, fmt="json", path=None):
    """Write ``report`` as ``json`` or ``csv`` to ``path`` (return the text when ``path`` is None)."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is None:
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}", str(path)) from None
    return text
