"""Parsing for the harness CSV schema.

The harness writes three files per experiment: <out>_summary.csv (one row
per sweep point and algorithm), <out>_trials.csv (one row per trial) and
<out>_trace.csv (per-step rows for traced trials). This module reads them
into plain numpy-backed records and validates the columns the plots need.
"""

from __future__ import annotations

import csv
import math
import os


SUMMARY_REQUIRED = ["value", "mean_regret", "stderr_regret", "algo"]
TRACE_REQUIRED = ["trial", "t", "step_cost", "cum_cost"]
TRIALS_REQUIRED = ["trial", "algo", "opt0", "off"]


class SchemaError(ValueError):
    """A required CSV column is missing or unparsable."""


def _read_rows(path, required):
    if not os.path.exists(path):
        raise SchemaError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{os.path.basename(path)} is missing columns: {', '.join(missing)}"
            )
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{os.path.basename(path)} has no data rows")
    return rows


def _num(row, key):
    try:
        return float(row[key])
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"column {key!r} is not numeric: {row[key]!r}") from exc


def load_summary(path):
    """Summary rows as dicts with numeric value/mean_regret/stderr_regret."""
    rows = _read_rows(path, SUMMARY_REQUIRED)
    out = []
    for row in rows:
        out.append({
            "algo": row["algo"],
            "value": _num(row, "value"),
            "mean_regret": _num(row, "mean_regret"),
            "stderr_regret": _num(row, "stderr_regret"),
        })
    return out


def load_trace(path):
    """Per-step rows of the first traced trial, keyed by algorithm run."""
    rows = _read_rows(path, TRACE_REQUIRED)
    first = rows[0]["trial"]
    out = [
        {"t": int(r["t"]), "step_cost": _num(r, "step_cost"),
         "cum_cost": _num(r, "cum_cost")}
        for r in rows if r["trial"] == first
    ]
    return out


def load_benchmarks(trials_path):
    """(mean opt0, mean off) from the companion trials file."""
    rows = _read_rows(trials_path, TRIALS_REQUIRED)
    opt0 = [_num(r, "opt0") for r in rows]
    off = [_num(r, "off") for r in rows]
    opt0 = [v for v in opt0 if not math.isnan(v)]
    off = [v for v in off if not math.isnan(v)]
    if not opt0:
        raise SchemaError("trials file has no finite opt0 values")
    mean_off = sum(off) / len(off) if off else math.nan
    return sum(opt0) / len(opt0), mean_off


def sibling_trials_path(trace_path: str) -> str:
    if trace_path.endswith("_trace.csv"):
        return trace_path[: -len("_trace.csv")] + "_trials.csv"
    root, ext = os.path.splitext(trace_path)
    return root + "_trials" + ext
