"""Delimited trace output and JSON report serialization.

CSV columns are ``t,road,y,body_velocity_or_x2,x3,u``: the sample time, road
displacement, measured output, the second and third plant states, and the
control value.  Floats are rendered with ``repr`` so parsing the file back
reproduces every value exactly.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .simulate import SimTrace

CSV_HEADER = "t,road,y,body_velocity_or_x2,x3,u"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_csv(trace: SimTrace, path) -> None:
    path = Path(path)
    lines = [CSV_HEADER]
    for k in range(len(trace)):
        lines.append(",".join([
            _fmt(trace.t[k]),
            _fmt(trace.road[k]),
            _fmt(trace.y[k]),
            _fmt(trace.states[k, 1]),
            _fmt(trace.states[k, 2]),
            _fmt(trace.u[k]),
        ]))
    path.write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Parse a trace CSV back into named column arrays."""
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a trace CSV (bad header)")
    names = CSV_HEADER.split(",")
    columns = {name: [] for name in names}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(names):
            raise ValueError(f"{path}: malformed row {line!r}")
        for name, part in zip(names, parts):
            columns[name].append(float(part))
    return {name: np.array(vals) for name, vals in columns.items()}


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()
